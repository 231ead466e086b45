//! Finite-volume n-particle Hamiltonian `H = -Δ + U + V` on a cube.
//!
//! Boundary conditions are plain truncation: the diagonal keeps `2nd` at
//! every site and hopping terms that leave the cube are dropped. Hopping
//! amplitude is `-1` between ℓ¹ neighbours.

use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::disorder::FieldSample;
use crate::format::sig17;
use crate::geometry::{max_norm, Cube, Site};
use crate::{Error, Result};

/// Matrices up to this dimension may be materialized densely.
pub const DENSE_LIMIT: usize = 4096;

/// Two-body interaction `Φ` supported in `[0, r0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    r0: u64,
    phi: Vec<f64>,
}

impl InteractionSpec {
    /// `phi[r] = Φ(r)`; entries past the end up to `r0` are zero.
    pub fn new(r0: u64, phi: Vec<f64>) -> Result<Self> {
        if phi.len() as u64 > r0 + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} interaction values given for range r0 = {r0}",
                phi.len()
            )));
        }
        if let Some(bad) = phi.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("interaction values must be finite and >= 0, got {bad}")));
        }
        Ok(InteractionSpec { r0, phi })
    }

    /// `Φ ≡ 0` with range 0.
    pub fn none() -> Self {
        InteractionSpec { r0: 0, phi: Vec::new() }
    }

    /// On-site (Hubbard-like) interaction of strength `u`.
    pub fn on_site(u: f64) -> Result<Self> {
        InteractionSpec::new(0, vec![u])
    }

    pub fn r0(&self) -> u64 {
        self.r0
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn at(&self, r: u64) -> f64 {
        self.phi.get(r as usize).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.phi.iter().all(|&v| v == 0.0)
    }
}

/// `U(x) = Σ_{i<j} Φ(|x_i - x_j|)` with max-norm distances in `Z^d`.
pub fn interaction_potential(x: &Site, d: usize, spec: &InteractionSpec) -> f64 {
    interaction_at(x.coords(), d, spec)
}

fn interaction_at(x: &[i64], d: usize, spec: &InteractionSpec) -> f64 {
    if spec.is_zero() {
        return 0.0;
    }
    let n = x.len() / d;
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += spec.at(max_norm(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]));
        }
    }
    total
}

/// `V(x_1) + … + V(x_n)`, with multiplicity for coinciding particles.
pub fn total_potential(x: &Site, d: usize, field: &FieldSample) -> Result<f64> {
    total_at(x.coords(), d, field)
}

fn total_at(x: &[i64], d: usize, field: &FieldSample) -> Result<f64> {
    x.chunks(d)
        .map(|p| field.value_at_fast(p).ok_or_else(|| Error::FieldCoverage { site: p.to_vec() }))
        .sum()
}

/// Real symmetric matrix of `H` restricted to a cube.
///
/// Off-diagonal entries are `-1` on ℓ¹ edges and are stored as compressed
/// rows of column indices; the diagonal is stored explicitly.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    cube: Cube,
    diagonal: Vec<f64>,
    potential: Vec<f64>,
    row_start: Vec<usize>,
    neighbours: Vec<u32>,
}

impl HamiltonianMatrix {
    pub fn cube(&self) -> &Cube {
        &self.cube
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `U(x) + V(x)` per site, i.e. the diagonal minus `2nd`.
    pub fn potential_trace(&self) -> &[f64] {
        &self.potential
    }

    pub fn neighbours(&self, row: usize) -> &[u32] {
        &self.neighbours[self.row_start[row]..self.row_start[row + 1]]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diagonal[i]
        } else if self.neighbours(i).binary_search(&(j as u32)).is_ok() {
            -1.0
        } else {
            0.0
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (row, out) in y.iter_mut().enumerate() {
            let hop: f64 = self.neighbours(row).iter().map(|&c| x[c as usize]).sum();
            *out = self.diagonal[row] * x[row] - hop;
        }
    }

    /// `‖H‖_∞`, the largest absolute row sum.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.dim())
            .map(|r| self.diagonal[r].abs() + self.neighbours(r).len() as f64)
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        (0..self.dim()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            let radius = self.neighbours(r).len() as f64;
            (lo.min(self.diagonal[r] - radius), hi.max(self.diagonal[r] + radius))
        })
    }

    pub fn trace(&self) -> f64 {
        self.diagonal.iter().sum()
    }

    /// Dense copy; refused above [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::DenseTooLarge { dim: n, limit: DENSE_LIMIT });
        }
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            m[(r, r)] = self.diagonal[r];
            for &c in self.neighbours(r) {
                m[(r, c as usize)] = -1.0;
            }
        }
        Ok(m)
    }

    /// Short hex digest of the matrix entries, for error reports.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.dim() as u64).to_le_bytes());
        for v in &self.diagonal {
            hasher.update(v.to_bits().to_le_bytes());
        }
        for c in &self.neighbours {
            hasher.update(c.to_le_bytes());
        }
        hasher.finalize().iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Writes every nonzero as an `i j value` line in row-major order.
    pub fn write_coordinate_list(&self, mut out: impl Write) -> io::Result<()> {
        for r in 0..self.dim() {
            let mut wrote_diag = false;
            for &c in self.neighbours(r) {
                let c = c as usize;
                if c > r && !wrote_diag {
                    writeln!(out, "{r} {r} {}", sig17(self.diagonal[r]))?;
                    wrote_diag = true;
                }
                writeln!(out, "{r} {c} {}", sig17(-1.0))?;
            }
            if !wrote_diag {
                writeln!(out, "{r} {r} {}", sig17(self.diagonal[r]))?;
            }
        }
        Ok(())
    }
}

/// A parsed coordinate-list matrix dump.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateList {
    pub entries: Vec<(usize, usize, f64)>,
}

impl CoordinateList {
    /// One past the largest row or column index.
    pub fn dim(&self) -> usize {
        self.entries.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0)
    }
}

/// Parses `i j value` lines; blank lines and `#` comments are skipped.
pub fn parse_coordinate_list(text: &str) -> std::result::Result<CoordinateList, String> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(format!("line {}: expected `i j value`", lineno + 1));
        };
        let i: usize = i.parse().map_err(|e| format!("line {}: row index: {e}", lineno + 1))?;
        let j: usize = j.parse().map_err(|e| format!("line {}: column index: {e}", lineno + 1))?;
        let v: f64 = v.parse().map_err(|e| format!("line {}: value: {e}", lineno + 1))?;
        if !v.is_finite() {
            return Err(format!("line {}: value is not finite", lineno + 1));
        }
        entries.push((i, j, v));
    }
    Ok(CoordinateList { entries })
}

/// Matrix of `-Δ` restricted to the cube (no potential).
pub fn assemble_laplacian(cube: &Cube, cap: usize) -> Result<HamiltonianMatrix> {
    assemble_with(cube, cap, |_| Ok(0.0))
}

/// `H = -Δ + U + V` on the cube, `V` read from `field`.
pub fn assemble_hamiltonian(
    cube: &Cube,
    field: &FieldSample,
    interaction: &InteractionSpec,
    cap: usize,
) -> Result<HamiltonianMatrix> {
    let d = cube.dims().d;
    assemble_with(cube, cap, |x| Ok(interaction_at(x, d, interaction) + total_at(x, d, field)?))
}

fn assemble_with(
    cube: &Cube,
    cap: usize,
    mut potential_at: impl FnMut(&[i64]) -> Result<f64>,
) -> Result<HamiltonianMatrix> {
    let dim = cube.checked_volume(cap)?;
    let width = cube.dims().width();
    let last = 2 * cube.radius() as i64;
    let strides: Vec<usize> = (0..width).map(|k| cube.stride(k)).collect();
    let kinetic = 2.0 * width as f64;
    let shift: Vec<i64> = cube.center().coords().iter().map(|u| u - cube.radius() as i64).collect();

    let mut diagonal = Vec::with_capacity(dim);
    let mut potential = Vec::with_capacity(dim);
    let mut row_start = Vec::with_capacity(dim + 1);
    let mut neighbours = Vec::with_capacity(dim * 2 * width);
    let mut offsets = vec![0i64; width];
    let mut coords = vec![0i64; width];
    row_start.push(0);
    for row in 0..dim {
        cube.write_offsets(row, &mut offsets);
        for k in 0..width {
            coords[k] = offsets[k] + shift[k];
        }
        let w = potential_at(&coords)?;
        potential.push(w);
        diagonal.push(kinetic + w);
        let start = neighbours.len();
        for k in 0..width {
            if offsets[k] > 0 {
                neighbours.push((row - strides[k]) as u32);
            }
            if offsets[k] < last {
                neighbours.push((row + strides[k]) as u32);
            }
        }
        neighbours[start..].sort_unstable();
        row_start.push(neighbours.len());
    }
    Ok(HamiltonianMatrix { cube: cube.clone(), diagonal, potential, row_start, neighbours })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::Region;
    use crate::geometry::{Dims, DEFAULT_SITE_CAP};

    fn line_cube(radius: u64) -> Cube {
        Cube::at_origin(Dims::new(1, 1, 1).unwrap(), radius)
    }

    fn field_on(radius: u64, values: Vec<f64>) -> FieldSample {
        FieldSample::from_values(Region::Cube(line_cube(radius)), values).unwrap()
    }

    #[test]
    fn interaction_examples() {
        let onsite = InteractionSpec::on_site(2.5).unwrap();
        assert_eq!(interaction_potential(&Site::new(vec![4, 4]), 1, &onsite), 2.5);
        assert_eq!(interaction_potential(&Site::new(vec![4, 5]), 1, &onsite), 0.0);

        let short = InteractionSpec::new(1, vec![1.0, 1.0]).unwrap();
        assert_eq!(interaction_potential(&Site::new(vec![0, 0, 1]), 1, &short), 3.0);

        let ranged = InteractionSpec::new(2, vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(interaction_potential(&Site::new(vec![0, 5]), 1, &ranged), 0.0);
    }

    #[test]
    fn interaction_rejects_negative_values() {
        assert!(InteractionSpec::new(1, vec![1.0, -0.5]).is_err());
        assert!(InteractionSpec::new(0, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn total_potential_examples() {
        let f = field_on(1, vec![0.5, 1.0, 2.0]);
        assert_eq!(total_potential(&Site::new(vec![1, 1]), 1, &f).unwrap(), 4.0);
        assert_eq!(total_potential(&Site::new(vec![-1]), 1, &f).unwrap(), 0.5);
        assert_eq!(total_potential(&Site::new(vec![0, 1]), 1, &f).unwrap(), 3.0);
        assert!(matches!(
            total_potential(&Site::new(vec![0, 7]), 1, &f),
            Err(Error::FieldCoverage { .. })
        ));
    }

    #[test]
    fn single_site_hamiltonian() {
        let h = assemble_hamiltonian(&line_cube(0), &field_on(0, vec![0.75]), &InteractionSpec::none(), 10)
            .unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.entry(0, 0), 2.75);
    }

    #[test]
    fn zero_potential_matches_laplacian() {
        let cube = Cube::at_origin(Dims::new(1, 2, 2).unwrap(), 2);
        let lap = assemble_laplacian(&cube, DEFAULT_SITE_CAP).unwrap();
        let h = assemble_hamiltonian(&cube, &field_on(2, vec![0.0; 5]), &InteractionSpec::none(), DEFAULT_SITE_CAP)
            .unwrap();
        assert_eq!(lap.to_dense().unwrap(), h.to_dense().unwrap());
    }

    #[test]
    fn laplacian_structure() {
        let cube = Cube::at_origin(Dims::new(2, 1, 1).unwrap(), 2);
        let lap = assemble_laplacian(&cube, DEFAULT_SITE_CAP).unwrap();
        let m = lap.to_dense().unwrap();
        assert_eq!(m, m.transpose());
        for r in 0..lap.dim() {
            assert_eq!(m[(r, r)], 4.0);
            let off: f64 = (0..lap.dim()).filter(|&c| c != r).map(|c| m[(r, c)]).sum();
            assert!(off >= -4.0);
            for c in 0..lap.dim() {
                if c != r {
                    let l1 = cube.site_at(r).l1_dist(&cube.site_at(c));
                    assert_eq!(m[(r, c)], if l1 == 1 { -1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let cube = Cube::at_origin(Dims::new(1, 2, 2).unwrap(), 2);
        let f = field_on(2, vec![0.3, 1.1, -0.4, 2.0, 0.9]);
        let h = assemble_hamiltonian(&cube, &f, &InteractionSpec::on_site(1.5).unwrap(), DEFAULT_SITE_CAP).unwrap();
        let x: Vec<f64> = (0..h.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; h.dim()];
        h.apply(&x, &mut y);
        let dense = h.to_dense().unwrap() * nalgebra::DVector::from_vec(x);
        for (a, b) in y.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn coordinate_list_round_trip() {
        let cube = Cube::at_origin(Dims::new(1, 2, 2).unwrap(), 1);
        let f = field_on(1, vec![0.1, 1.0 / 3.0, 2.0]);
        let h = assemble_hamiltonian(&cube, &f, &InteractionSpec::on_site(0.5).unwrap(), DEFAULT_SITE_CAP).unwrap();
        let mut buf = Vec::new();
        h.write_coordinate_list(&mut buf).unwrap();
        let parsed = parse_coordinate_list(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(parsed.dim(), h.dim());
        for (i, j, v) in parsed.entries {
            assert_eq!(v, h.entry(i, j));
        }
        assert!(parse_coordinate_list("0 0").is_err());
        assert!(parse_coordinate_list("0 0 nan").is_err());
    }

    #[test]
    fn cap_exceeded() {
        let cube = Cube::at_origin(Dims::new(1, 3, 3).unwrap(), 30);
        assert!(matches!(assemble_laplacian(&cube, DEFAULT_SITE_CAP), Err(Error::CubeTooLarge { .. })));
    }
}
