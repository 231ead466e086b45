//! Lattice index arithmetic for n-particle cubes in `Z^{nd}`.
//!
//! A configuration of `n` particles in `Z^d` is a single point of `Z^{nd}`,
//! stored flat: particle `i` owns coordinates `i*d .. (i+1)*d`. Cubes are
//! max-norm balls; boundaries and edges use graph (ℓ¹) adjacency.
//!
//! Sites of a cube are enumerated in row-major lexicographic order over the
//! flattened coordinates. That order is the matrix index map used everywhere
//! else and must not change.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default ceiling on the number of sites a cube may enumerate.
pub const DEFAULT_SITE_CAP: usize = 200_000;

/// Single-particle dimension `d`, particles `n` in this subsystem, and the
/// global particle cap `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub d: usize,
    pub n: usize,
    pub n_max: usize,
}

impl Dims {
    pub fn new(d: usize, n: usize, n_max: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDims("d must be at least 1".into()));
        }
        if n == 0 || n > n_max {
            return Err(Error::InvalidDims(format!("need 1 <= n <= N, got n={n}, N={n_max}")));
        }
        Ok(Dims { d, n, n_max })
    }

    /// Number of lattice coordinates of a configuration, `n*d`.
    pub fn width(&self) -> usize {
        self.n * self.d
    }

    /// The same lattice with `n` replaced (used for subsystems and projections).
    pub fn with_particles(&self, n: usize) -> Result<Self> {
        Dims::new(self.d, n, self.n_max)
    }
}

/// A point `x = (x_1, …, x_n)` of `(Z^d)^n`, flattened.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn new(coords: Vec<i64>) -> Self {
        Site(coords)
    }

    pub fn origin(width: usize) -> Self {
        Site(vec![0; width])
    }

    /// All `n` particles at the same single-particle position.
    pub fn diagonal(position: &[i64], n: usize) -> Self {
        Site(position.iter().copied().cycle().take(position.len() * n).collect())
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn particle(&self, i: usize, d: usize) -> &[i64] {
        &self.0[i * d..(i + 1) * d]
    }

    pub fn particles(&self, d: usize) -> impl Iterator<Item = &[i64]> {
        self.0.chunks(d)
    }

    pub fn max_dist(&self, other: &Site) -> u64 {
        max_norm(&self.0, &other.0)
    }

    pub fn l1_dist(&self, other: &Site) -> u64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.abs_diff(*b)).sum()
    }

    /// Reorders particles: particle `i` of the result is particle `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize], d: usize) -> Site {
        Site(perm.iter().flat_map(|&p| self.particle(p, d).iter().copied()).collect())
    }
}

pub(crate) fn max_norm(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

/// The n-particle cube `C_L(u) = { x : |x - u| <= L }` in max-norm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cube {
    dims: Dims,
    center: Site,
    radius: u64,
}

impl Cube {
    pub fn new(dims: Dims, center: Site, radius: u64) -> Result<Self> {
        if center.width() != dims.width() {
            return Err(Error::InvalidDims(format!(
                "center has {} coordinates, expected n*d = {}",
                center.width(),
                dims.width()
            )));
        }
        Ok(Cube { dims, center, radius })
    }

    /// Cube centered at the origin of `Z^{nd}`.
    pub fn at_origin(dims: Dims, radius: u64) -> Self {
        Cube { dims, center: Site::origin(dims.width()), radius }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn center(&self) -> &Site {
        &self.center
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn side(&self) -> u64 {
        2 * self.radius + 1
    }

    /// `(2L+1)^{nd}`, or `None` when it does not fit in 128 bits.
    pub fn volume(&self) -> Option<u128> {
        let side = self.side() as u128;
        (0..self.dims.width()).try_fold(1u128, |acc, _| acc.checked_mul(side))
    }

    /// Volume as a `usize`, refusing anything above `cap`.
    pub fn checked_volume(&self, cap: usize) -> Result<usize> {
        match self.volume() {
            Some(v) if v <= cap as u128 => Ok(v as usize),
            Some(v) => Err(Error::CubeTooLarge { sites: v, cap }),
            None => Err(Error::CubeTooLarge { sites: u128::MAX, cap }),
        }
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.width() == self.dims.width() && self.center.max_dist(x) <= self.radius
    }

    /// Whether every site of `inner` lies in `self`.
    pub fn contains_cube(&self, inner: &Cube) -> bool {
        inner.dims.width() == self.dims.width()
            && self.center.max_dist(&inner.center) + inner.radius <= self.radius
    }

    /// Position of `x` in the canonical enumeration.
    pub fn index_of(&self, x: &Site) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side() as usize;
        let r = self.radius as i64;
        Some(
            x.0.iter()
                .zip(&self.center.0)
                .fold(0usize, |acc, (xi, ui)| acc * side + (xi - ui + r) as usize),
        )
    }

    /// Inverse of [`Cube::index_of`]; `index` must be below the volume.
    pub fn site_at(&self, index: usize) -> Site {
        let mut coords = vec![0i64; self.dims.width()];
        self.write_offsets(index, &mut coords);
        for (c, u) in coords.iter_mut().zip(&self.center.0) {
            *c += u - self.radius as i64;
        }
        Site(coords)
    }

    /// Writes the per-axis offsets `x_k - u_k + L` (in `0..=2L`) of `index`.
    pub(crate) fn write_offsets(&self, mut index: usize, out: &mut [i64]) {
        let side = self.side() as usize;
        for slot in out.iter_mut().rev() {
            *slot = (index % side) as i64;
            index /= side;
        }
    }

    /// Stride of axis `k` in the canonical index map.
    pub(crate) fn stride(&self, axis: usize) -> usize {
        (self.side() as usize).pow((self.dims.width() - 1 - axis) as u32)
    }

    /// Single-particle cube `C_L(u_i)` of particle `i`.
    pub fn projection(&self, i: usize) -> Cube {
        let d = self.dims.d;
        Cube {
            dims: Dims { d, n: 1, n_max: self.dims.n_max },
            center: Site(self.center.particle(i, d).to_vec()),
            radius: self.radius,
        }
    }

    /// All single-particle projection cubes, one per particle.
    pub fn projections(&self) -> Vec<Cube> {
        (0..self.dims.n).map(|i| self.projection(i)).collect()
    }

    /// Sub-cube of `radius` around `center`.
    pub fn with_center(&self, center: Site, radius: u64) -> Result<Cube> {
        Cube::new(self.dims, center, radius)
    }
}

/// Annulus `C_b(u) \ C_a(u)` with `0 <= a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: Site,
    pub inner: u64,
    pub outer: u64,
}

impl Annulus {
    pub fn new(center: Site, inner: u64, outer: u64) -> Result<Self> {
        if inner >= outer {
            return Err(Error::InvalidParameter(format!("annulus needs a < b, got a={inner}, b={outer}")));
        }
        Ok(Annulus { center, inner, outer })
    }

    pub fn width(&self) -> u64 {
        self.outer - self.inner
    }

    pub fn contains(&self, x: &Site) -> bool {
        let r = self.center.max_dist(x);
        r > self.inner && r <= self.outer
    }
}

/// Length scales `L_{k+1} = floor(L_k^{3/2}) + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSequence {
    l0: u64,
}

impl ScaleSequence {
    pub fn new(l0: u64) -> Result<Self> {
        if l0 < 3 {
            return Err(Error::InvalidParameter(format!("initial scale L0 must be >= 3, got {l0}")));
        }
        Ok(ScaleSequence { l0 })
    }

    pub fn l0(&self) -> u64 {
        self.l0
    }

    /// `L_k`, by exact integer recursion.
    pub fn scale_at(&self, k: usize) -> Result<u64> {
        let mut l = self.l0;
        for step in 0..k {
            l = next_scale(l).ok_or(Error::ScaleTooDeep { k: step + 1 })?;
        }
        Ok(l)
    }

    /// `L_0, …, L_k`.
    pub fn values(&self, k: usize) -> Result<Vec<u64>> {
        (0..=k).map(|j| self.scale_at(j)).collect()
    }
}

/// `floor(L^{3/2}) + 1`, computed as `isqrt(L^3) + 1`.
pub fn next_scale(l: u64) -> Option<u64> {
    let cube = (l as u128).checked_mul(l as u128)?.checked_mul(l as u128)?;
    let next = cube.isqrt().checked_add(1)?;
    (next < (1u128 << 63)).then_some(next as u64)
}

/// Lexicographic enumeration of every site of the cube.
pub fn cube_sites(cube: &Cube, cap: usize) -> Result<Vec<Site>> {
    let volume = cube.checked_volume(cap)?;
    Ok((0..volume).map(|i| cube.site_at(i)).collect())
}

/// Sites of the cube with an ℓ¹ neighbour outside it. Empty for `L = 0`.
pub fn internal_boundary(cube: &Cube, cap: usize) -> Result<Vec<Site>> {
    let volume = cube.checked_volume(cap)?;
    if cube.radius == 0 {
        return Ok(Vec::new());
    }
    let last = 2 * cube.radius as i64;
    let mut offsets = vec![0i64; cube.dims.width()];
    let mut out = Vec::new();
    for i in 0..volume {
        cube.write_offsets(i, &mut offsets);
        if offsets.iter().any(|&o| o == 0 || o == last) {
            out.push(cube.site_at(i));
        }
    }
    Ok(out)
}

/// Sites outside the cube with an ℓ¹ neighbour inside it, sorted.
pub fn external_boundary(cube: &Cube, cap: usize) -> Result<Vec<Site>> {
    let mut out: Vec<Site> = boundary_edge_pairs(cube, cap)?.into_iter().map(|(_, v)| v).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Ordered pairs `(v, v')` with `v` in the cube, `v'` outside and `|v - v'|_1 = 1`,
/// in canonical order of `v` then axis then direction (`-` before `+`).
pub fn boundary_edge_pairs(cube: &Cube, cap: usize) -> Result<Vec<(Site, Site)>> {
    let volume = cube.checked_volume(cap)?;
    let last = 2 * cube.radius as i64;
    let mut offsets = vec![0i64; cube.dims.width()];
    let mut out = Vec::new();
    for i in 0..volume {
        cube.write_offsets(i, &mut offsets);
        if !offsets.iter().any(|&o| o == 0 || o == last) {
            continue;
        }
        let v = cube.site_at(i);
        for (axis, &o) in offsets.iter().enumerate() {
            if o == 0 {
                let mut w = v.clone();
                w.0[axis] -= 1;
                out.push((v.clone(), w));
            }
            if o == last {
                let mut w = v.clone();
                w.0[axis] += 1;
                out.push((v.clone(), w));
            }
        }
    }
    Ok(out)
}

/// Symmetrized distance `min_τ |x - τ y|` over particle permutations.
pub fn sym_distance(x: &Site, y: &Site, d: usize) -> u64 {
    assert_eq!(x.width(), y.width(), "sym_distance: mismatched configurations");
    let n = x.width() / d;
    // pairwise particle distances, then a bottleneck assignment by enumeration
    let table: Vec<u64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| max_norm(x.particle(i, d), y.particle(j, d)))
        .collect();
    let mut best = u64::MAX;
    for_each_permutation(n, |perm| {
        let worst = perm.iter().enumerate().map(|(i, &j)| table[i * n + j]).max().unwrap_or(0);
        best = best.min(worst);
    });
    best
}

/// Calls `f` on every permutation of `0..n` in lexicographic order.
pub(crate) fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        f(&perm);
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| perm[i - 1] < perm[i]) else {
            return;
        };
        let j = (i..n).rev().find(|&j| perm[j] > perm[i - 1]).expect("pivot exists");
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
}

/// Outcome of the partial/full interactivity test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interactivity {
    /// Particles split into two groups whose projections are far apart;
    /// `group` is the part containing particle 0, `rest` its complement.
    Partial { group: Vec<usize>, rest: Vec<usize> },
    Full,
}

impl Interactivity {
    pub fn is_partial(&self) -> bool {
        matches!(self, Interactivity::Partial { .. })
    }
}

/// Max-norm gap between the single-particle cubes `C_L(a)` and `C_L(b)`.
pub fn projection_gap(a: &[i64], b: &[i64], radius: u64) -> u64 {
    max_norm(a, b).saturating_sub(2 * radius)
}

/// PI iff some bipartition `(J, J^c)` has all cross projection gaps `>= 2L + r0`.
///
/// Bipartitions are normalised so `J` contains particle 0 and are tried in
/// lexicographic order of the sorted index list of `J`; the first witness wins.
/// One-particle cubes are FI.
pub fn classify_pi_fi(cube: &Cube, r0: u64) -> Interactivity {
    let n = cube.dims.n;
    let d = cube.dims.d;
    if n < 2 {
        return Interactivity::Full;
    }
    let need = 2 * cube.radius + r0;
    let mut groups: Vec<Vec<usize>> = (0u64..(1u64 << (n - 1)))
        .map(|mask| {
            std::iter::once(0)
                .chain((1..n).filter(|&i| mask & (1 << (i - 1)) != 0))
                .collect::<Vec<_>>()
        })
        .filter(|g| g.len() < n)
        .collect();
    groups.sort();
    for group in groups {
        let rest: Vec<usize> = (0..n).filter(|i| !group.contains(i)).collect();
        let separated = group.iter().all(|&i| {
            rest.iter().all(|&j| {
                projection_gap(cube.center.particle(i, d), cube.center.particle(j, d), cube.radius) >= need
            })
        });
        if separated {
            return Interactivity::Partial { group, rest };
        }
    }
    Interactivity::Full
}
