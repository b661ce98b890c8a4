use crate::error::{Error, Result};

/// A lattice point `(i/K, j/K)` addressed by its integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub i: usize,
    pub j: usize,
}

impl Region {
    pub const fn new(i: usize, j: usize) -> Self {
        Region { i, j }
    }
}

/// The `(K+1) x (K+1)` mesh of the unit square with spacing `1/K`.
///
/// Regions are stored row-major by `i` (the x index): `index = i * (K+1) + j`.
/// The boundary is every region with `x` or `y` in `{0, 1}`; it absorbs nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeGrid {
    k: usize,
}

/// Axis-aligned neighbor offsets in a fixed order: -x, +x, -y, +y.
const OFFSETS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

impl LatticeGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("lattice refinement K must be >= 1".into()));
        }
        Ok(LatticeGrid { k })
    }

    /// Grid whose spacing is `ds`, which must be `1/K` for an integer `K`.
    pub fn from_spacing(ds: f64) -> Result<Self> {
        if !(ds > 0.0 && ds <= 1.0) {
            return Err(Error::BadSpacing(ds));
        }
        let k = (1.0 / ds).round();
        if ((1.0 / k) - ds).abs() > 1e-9 * ds {
            return Err(Error::BadSpacing(ds));
        }
        LatticeGrid::new(k as usize)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta_s(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Points per side, `K + 1`.
    pub fn side(&self) -> usize {
        self.k + 1
    }

    pub fn num_regions(&self) -> usize {
        self.side() * self.side()
    }

    pub fn index(&self, r: Region) -> usize {
        r.i * self.side() + r.j
    }

    pub fn region(&self, index: usize) -> Region {
        Region::new(index / self.side(), index % self.side())
    }

    pub fn coords(&self, r: Region) -> (f64, f64) {
        let k = self.k as f64;
        (r.i as f64 / k, r.j as f64 / k)
    }

    pub fn contains(&self, r: Region) -> bool {
        r.i <= self.k && r.j <= self.k
    }

    fn check(&self, r: Region) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(Error::NotOnGrid {
                i: r.i,
                j: r.j,
                k: self.k,
            })
        }
    }

    /// Maps real coordinates to the lattice point they denote.
    pub fn region_at(&self, x: f64, y: f64) -> Result<Region> {
        let k = self.k as f64;
        let snap = |v: f64| {
            let s = (v * k).round();
            ((v * k - s).abs() <= 1e-9 && (0.0..=k).contains(&s)).then_some(s as usize)
        };
        match (snap(x), snap(y)) {
            (Some(i), Some(j)) => Ok(Region::new(i, j)),
            _ => Err(Error::NotALatticePoint { x, y, k: self.k }),
        }
    }

    pub fn is_boundary(&self, r: Region) -> bool {
        r.i == 0 || r.j == 0 || r.i == self.k || r.j == self.k
    }

    pub fn is_interior(&self, r: Region) -> bool {
        !self.is_boundary(r)
    }

    pub fn regions(&self) -> impl Iterator<Item = Region> + '_ {
        (0..self.num_regions()).map(move |n| self.region(n))
    }

    pub fn interior(&self) -> impl Iterator<Item = Region> + '_ {
        self.regions().filter(move |r| self.is_interior(*r))
    }

    pub fn boundary(&self) -> impl Iterator<Item = Region> + '_ {
        self.regions().filter(move |r| self.is_boundary(*r))
    }

    /// Neighbors at distance `Δs` inside the unit square, in -x, +x, -y, +y order.
    pub fn neighbors(&self, r: Region) -> Result<Vec<Region>> {
        self.check(r)?;
        Ok(self.neighbors_unchecked(r).collect())
    }

    pub(crate) fn neighbors_unchecked(&self, r: Region) -> impl Iterator<Item = Region> + '_ {
        OFFSETS.iter().filter_map(move |&(di, dj)| {
            let i = r.i.checked_add_signed(di)?;
            let j = r.j.checked_add_signed(dj)?;
            let n = Region::new(i, j);
            self.contains(n).then_some(n)
        })
    }

    /// Number of neighbors of `r` that lie on the absorbing boundary.
    pub fn boundary_neighbor_count(&self, r: Region) -> usize {
        self.neighbors_unchecked(r).filter(|n| self.is_boundary(*n)).count()
    }

    /// Flat indices of the four neighbors of an interior region, in the fixed
    /// -x, +x, -y, +y order.
    pub(crate) fn stencil(&self, index: usize) -> [usize; 4] {
        let s = self.side();
        [index - s, index + s, index - 1, index + 1]
    }
}
