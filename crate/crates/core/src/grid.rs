//! Periodic structured mesh of the unit torus in one, two or three dimensions.
//!
//! Cells are numbered lexicographically in their multi-index `(i, j, k)` with
//! the first index slowest. Every face is owned by the cell on its negative
//! side: face `(axis, K)` separates `K` from `K + e_axis` (modulo the torus),
//! and its normal points from `K` to that neighbor. Face fields are therefore
//! indexed by the owner cell, which makes the face count per axis equal to the
//! cell count.

use crate::error::{Error, Result};

/// Index of a cell in lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub usize);

/// A face orthogonal to `axis`, identified by the cell on its negative side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceId {
    pub axis: usize,
    pub owner: CellId,
}

/// Side of a cell along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }
}

/// Dual cell `D_sigma = D_{sigma,K} ∪ D_{sigma,L}` attached to a face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualCell {
    pub face: FaceId,
    /// Cells contributing a half each: `(K, L)` with the normal from `K` to `L`.
    pub halves: (CellId, CellId),
    pub measure: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    cells_per_axis: Vec<usize>,
    h_axis: Vec<f64>,
    h: f64,
    cell_count: usize,
    strides: Vec<usize>,
    // plus[axis][cell] / minus[axis][cell]: neighbor across the +/- face.
    plus: Vec<Vec<usize>>,
    minus: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds the periodic mesh with `cells_per_axis[i]` cells along axis `i`.
    pub fn new(dim: usize, cells_per_axis: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidMesh(format!("dimension {dim} not in 1..=3")));
        }
        if cells_per_axis.len() != dim {
            return Err(Error::InvalidMesh(format!(
                "expected {dim} cell counts, got {}",
                cells_per_axis.len()
            )));
        }
        if let Some(n) = cells_per_axis.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidMesh(format!(
                "every axis needs at least 2 cells, got {n}"
            )));
        }
        let h_axis: Vec<f64> = cells_per_axis.iter().map(|&n| 1.0 / n as f64).collect();
        let h = h_axis.iter().cloned().fold(0.0, f64::max);
        let cell_count = cells_per_axis.iter().product();

        let mut strides = vec![1; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * cells_per_axis[axis + 1];
        }

        let mut plus = vec![vec![0; cell_count]; dim];
        let mut minus = vec![vec![0; cell_count]; dim];
        for cell in 0..cell_count {
            for axis in 0..dim {
                let n = cells_per_axis[axis];
                let stride = strides[axis];
                let idx = (cell / stride) % n;
                let base = cell - idx * stride;
                plus[axis][cell] = base + ((idx + 1) % n) * stride;
                minus[axis][cell] = base + ((idx + n - 1) % n) * stride;
            }
        }

        Ok(Self {
            dim,
            cells_per_axis: cells_per_axis.to_vec(),
            h_axis,
            h,
            cell_count,
            strides,
            plus,
            minus,
        })
    }

    /// Uniform `n^dim` mesh.
    pub fn uniform(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells_per_axis
    }

    pub fn cell_count(&self) -> usize {
        self.cell_count
    }

    /// Number of faces orthogonal to one axis; equals the cell count.
    pub fn faces_per_axis(&self) -> usize {
        self.cell_count
    }

    pub fn face_count(&self) -> usize {
        self.cell_count * self.dim
    }

    /// Spacing along `axis`.
    pub fn h_axis(&self, axis: usize) -> f64 {
        self.h_axis[axis]
    }

    /// Mesh size `h = max_i h_i`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Regularity ratio `max_i h / h_i`.
    pub fn regularity(&self) -> f64 {
        self.h_axis.iter().map(|hi| self.h / hi).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h_axis.iter().product()
    }

    /// Measure of a face orthogonal to `axis`.
    pub fn face_area(&self, axis: usize) -> f64 {
        self.cell_volume() / self.h_axis[axis]
    }

    /// Periodic distance between the two cell centers across an `axis` face.
    pub fn face_distance(&self, axis: usize) -> f64 {
        self.h_axis[axis]
    }

    pub fn dual_volume(&self) -> f64 {
        self.cell_volume()
    }

    #[inline]
    pub fn plus(&self, axis: usize, cell: usize) -> usize {
        self.plus[axis][cell]
    }

    #[inline]
    pub fn minus(&self, axis: usize, cell: usize) -> usize {
        self.minus[axis][cell]
    }

    #[inline]
    pub fn neighbor(&self, cell: usize, axis: usize, side: Side) -> usize {
        match side {
            Side::Plus => self.plus[axis][cell],
            Side::Minus => self.minus[axis][cell],
        }
    }

    pub fn multi_index(&self, cell: usize) -> Vec<usize> {
        (0..self.dim)
            .map(|a| (cell / self.strides[a]) % self.cells_per_axis[a])
            .collect()
    }

    pub fn cell_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.strides)
            .zip(&self.cells_per_axis)
            .map(|((&i, &s), &n)| (i % n) * s)
            .sum()
    }

    /// Mass center of a cell.
    pub fn cell_center(&self, cell: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim);
        self.cell_center_into(cell, &mut x);
        x
    }

    pub fn cell_center_into(&self, cell: usize, x: &mut Vec<f64>) {
        x.clear();
        for a in 0..self.dim {
            let idx = (cell / self.strides[a]) % self.cells_per_axis[a];
            x.push((idx as f64 + 0.5) * self.h_axis[a]);
        }
    }

    /// Lower corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> Vec<f64> {
        self.multi_index(cell)
            .iter()
            .zip(&self.h_axis)
            .map(|(&i, &h)| i as f64 * h)
            .collect()
    }

    /// Mass center of a face, in `[0, 1)^d`.
    pub fn face_center(&self, face: FaceId) -> Vec<f64> {
        let mut x = self.cell_center(face.owner.0);
        x[face.axis] = (x[face.axis] + 0.5 * self.h_axis[face.axis]).rem_euclid(1.0);
        x
    }

    /// The `2 d` faces of a cell with the sign of their outward normal relative to `+e_axis`.
    pub fn faces_of(&self, cell: CellId) -> Vec<(FaceId, Side)> {
        let mut faces = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            faces.push((
                FaceId {
                    axis,
                    owner: CellId(self.minus[axis][cell.0]),
                },
                Side::Minus,
            ));
            faces.push((FaceId { axis, owner: cell }, Side::Plus));
        }
        faces
    }

    /// Cells `(K, L)` joined by a face, oriented along `+e_axis`.
    pub fn face_cells(&self, face: FaceId) -> (CellId, CellId) {
        (face.owner, CellId(self.plus[face.axis][face.owner.0]))
    }

    /// The cell on the other side of `face` as seen from `cell`.
    pub fn neighbor_across(&self, cell: CellId, face: FaceId) -> Result<CellId> {
        if face.axis >= self.dim || face.owner.0 >= self.cell_count || cell.0 >= self.cell_count {
            return Err(Error::NotIncident {
                cell: cell.0,
                axis: face.axis,
                owner: face.owner.0,
            });
        }
        let (k, l) = self.face_cells(face);
        if cell == k {
            Ok(l)
        } else if cell == l {
            Ok(k)
        } else {
            Err(Error::NotIncident {
                cell: cell.0,
                axis: face.axis,
                owner: face.owner.0,
            })
        }
    }

    pub fn dual_cell(&self, face: FaceId) -> DualCell {
        DualCell {
            face,
            halves: self.face_cells(face),
            measure: self.dual_volume(),
        }
    }

    /// Iterates over all faces, axis-major.
    pub fn faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        (0..self.dim).flat_map(move |axis| {
            (0..self.cell_count).map(move |c| FaceId {
                axis,
                owner: CellId(c),
            })
        })
    }

    /// Per-axis integer refinement factor from `self` to `fine`, if the meshes are nested.
    pub fn refinement_factor(&self, fine: &Mesh) -> Option<Vec<usize>> {
        if fine.dim != self.dim {
            return None;
        }
        self.cells_per_axis
            .iter()
            .zip(&fine.cells_per_axis)
            .map(|(&c, &f)| if f % c == 0 { Some(f / c) } else { None })
            .collect()
    }
}
