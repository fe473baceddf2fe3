//! Piecewise-constant data on the primary grid (one value per cell) and on the
//! dual grids (one value per face of a given axis), projections of pointwise
//! functions, face traces and the CSV snapshot format.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{FaceId, Mesh};

/// One real per cell, in lexicographic cell order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self {
            values: vec![c; mesh.cell_count()],
        }
    }

    pub fn from_vec(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        check_len(mesh.cell_count(), values.len())?;
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cellwise product.
    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for ScalarField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

/// `d` cell fields, one per Cartesian component.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            components: vec![ScalarField::zeros(mesh); mesh.dim()],
        }
    }

    pub fn constant(mesh: &Mesh, c: &[f64]) -> Result<Self> {
        check_len(mesh.dim(), c.len())?;
        Ok(Self {
            components: c.iter().map(|&v| ScalarField::constant(mesh, v)).collect(),
        })
    }

    pub fn from_components(mesh: &Mesh, components: Vec<ScalarField>) -> Result<Self> {
        check_len(mesh.dim(), components.len())?;
        for c in &components {
            check_len(mesh.cell_count(), c.len())?;
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    /// Euclidean norm of the velocity in one cell.
    pub fn norm_at(&self, cell: usize) -> f64 {
        self.components
            .iter()
            .map(|c| c[cell] * c[cell])
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    /// `r * v`, componentwise.
    pub fn scaled_by(&self, r: &ScalarField) -> VectorField {
        VectorField {
            components: self.components.iter().map(|c| c.mul(r)).collect(),
        }
    }
}

/// One real per face of a single axis (equivalently per dual cell of `D_axis`),
/// indexed by the owner cell of the face.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    pub axis: usize,
    pub values: Vec<f64>,
}

impl FaceField {
    pub fn zeros(mesh: &Mesh, axis: usize) -> Self {
        Self {
            axis,
            values: vec![0.0; mesh.faces_per_axis()],
        }
    }

    pub fn constant(mesh: &Mesh, axis: usize, c: f64) -> Self {
        Self {
            axis,
            values: vec![c; mesh.faces_per_axis()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl std::ops::Index<usize> for FaceField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// The one-sided values of a cell field at a face, relative to the face normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceTrace {
    pub inner: f64,
    pub outer: f64,
}

impl FaceTrace {
    pub fn average(&self) -> f64 {
        0.5 * (self.inner + self.outer)
    }

    pub fn jump(&self) -> f64 {
        self.outer - self.inner
    }
}

/// Traces of `field` at `face`: inner value from the owner cell, outer value from its `+e_axis` neighbor.
pub fn trace(mesh: &Mesh, field: &ScalarField, face: FaceId) -> FaceTrace {
    let (k, l) = mesh.face_cells(face);
    FaceTrace {
        inner: field[k.0],
        outer: field[l.0],
    }
}

/// Midpoint-rule sub-sampling used by the projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quadrature {
    pub samples_per_axis: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            samples_per_axis: 4,
        }
    }
}

impl Quadrature {
    /// Mean of `f` over the box `[lo, lo + width]`, points wrapped onto the torus.
    pub fn box_mean(&self, lo: &[f64], width: &[f64], f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
        let d = lo.len();
        let s = self.samples_per_axis.max(1);
        let total = s.pow(d as u32);
        let mut x = vec![0.0; d];
        let mut sum = 0.0;
        for n in 0..total {
            let mut rem = n;
            for a in (0..d).rev() {
                let idx = rem % s;
                rem /= s;
                x[a] = (lo[a] + (idx as f64 + 0.5) / s as f64 * width[a]).rem_euclid(1.0);
            }
            sum += f(&x);
        }
        sum / total as f64
    }
}

/// Cell-mean projection of a pointwise function.
pub fn project_cell(
    mesh: &Mesh,
    quad: Quadrature,
    mut f: impl FnMut(&[f64]) -> f64,
) -> ScalarField {
    let width: Vec<f64> = (0..mesh.dim()).map(|a| mesh.h_axis(a)).collect();
    let values = (0..mesh.cell_count())
        .map(|c| quad.box_mean(&mesh.cell_origin(c), &width, &mut f))
        .collect();
    ScalarField { values }
}

/// Cell-mean projection of a vector-valued function with `mesh.dim()` components.
pub fn project_cell_vector(
    mesh: &Mesh,
    quad: Quadrature,
    f: impl Fn(&[f64]) -> Vec<f64>,
) -> VectorField {
    let components = (0..mesh.dim())
        .map(|i| project_cell(mesh, quad, |x| f(x)[i]))
        .collect();
    VectorField { components }
}

/// Dual-cell projection: component `i` of `f` averaged over the dual cells of axis `i`.
pub fn project_dual(
    mesh: &Mesh,
    quad: Quadrature,
    f: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<FaceField> {
    (0..mesh.dim())
        .map(|axis| project_dual_axis(mesh, quad, axis, |x| f(x)[axis]))
        .collect()
}

/// Projection of a scalar function onto the dual cells of one axis.
pub fn project_dual_axis(
    mesh: &Mesh,
    quad: Quadrature,
    axis: usize,
    mut f: impl FnMut(&[f64]) -> f64,
) -> FaceField {
    let width: Vec<f64> = (0..mesh.dim()).map(|a| mesh.h_axis(a)).collect();
    let values = (0..mesh.faces_per_axis())
        .map(|c| {
            // D_sigma is the cell box shifted by half a cell along the face normal
            let mut lo = mesh.cell_origin(c);
            lo[axis] += 0.5 * mesh.h_axis(axis);
            quad.box_mean(&lo, &width, &mut f)
        })
        .collect();
    FaceField { axis, values }
}

/// Exact aggregation of a fine-grid field onto a nested coarse grid.
pub fn restrict(coarse: &Mesh, fine: &Mesh, field: &ScalarField) -> Result<ScalarField> {
    let factor = coarse.refinement_factor(fine).ok_or_else(|| {
        Error::NotNested(format!(
            "{:?} does not refine {:?}",
            fine.cells_per_axis(),
            coarse.cells_per_axis()
        ))
    })?;
    check_len(fine.cell_count(), field.len())?;
    let per_cell: usize = factor.iter().product();
    let mut values = vec![0.0; coarse.cell_count()];
    for (c, v) in field.values.iter().enumerate() {
        let coarse_idx: Vec<usize> = fine
            .multi_index(c)
            .iter()
            .zip(&factor)
            .map(|(i, f)| i / f)
            .collect();
        values[coarse.cell_index(&coarse_idx)] += v;
    }
    for v in &mut values {
        *v /= per_cell as f64;
    }
    Ok(ScalarField { values })
}

pub fn restrict_vector(coarse: &Mesh, fine: &Mesh, field: &VectorField) -> Result<VectorField> {
    let components = field
        .components
        .iter()
        .map(|c| restrict(coarse, fine, c))
        .collect::<Result<_>>()?;
    Ok(VectorField { components })
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, got })
    }
}

const COORD_NAMES: [&str; 3] = ["x", "y", "z"];
const INDEX_NAMES: [&str; 3] = ["i", "j", "k"];

/// Header line of a snapshot file for a mesh of dimension `dim`.
pub fn snapshot_header(dim: usize) -> String {
    let mut cols: Vec<String> = INDEX_NAMES[..dim].iter().map(|s| s.to_string()).collect();
    cols.extend(COORD_NAMES[..dim].iter().map(|s| s.to_string()));
    cols.push("rho".into());
    cols.extend((1..=dim).map(|i| format!("u{i}")));
    cols.join(",")
}

/// Writes one row per cell in lexicographic order; reals use shortest round-trip formatting.
pub fn write_snapshot<W: Write>(
    out: &mut W,
    mesh: &Mesh,
    rho: &ScalarField,
    u: &VectorField,
) -> Result<()> {
    writeln!(out, "{}", snapshot_header(mesh.dim()))?;
    let mut line = String::new();
    let mut x = Vec::new();
    for c in 0..mesh.cell_count() {
        line.clear();
        for i in mesh.multi_index(c) {
            write!(line, "{i},").unwrap();
        }
        mesh.cell_center_into(c, &mut x);
        for xi in &x {
            write!(line, "{xi:?},").unwrap();
        }
        write!(line, "{:?}", rho[c]).unwrap();
        for comp in &u.components {
            write!(line, ",{:?}", comp[c]).unwrap();
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Snapshot contents read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub cells_per_axis: Vec<usize>,
    pub rho: ScalarField,
    pub u: VectorField,
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<Snapshot> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Csv("empty file".into()))??;
    let dim = (1..=3)
        .find(|&d| snapshot_header(d) == header.trim())
        .ok_or_else(|| Error::Csv(format!("unrecognised header `{header}`")))?;
    let mut idx = Vec::new();
    let mut rho = Vec::new();
    let mut u = vec![Vec::new(); dim];
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 * dim + 1 {
            return Err(Error::Csv(format!(
                "row {} has {} columns",
                n + 2,
                cols.len()
            )));
        }
        let bad = |s: &str| Error::Csv(format!("row {}: cannot parse `{s}`", n + 2));
        let mi: Vec<usize> = cols[..dim]
            .iter()
            .map(|s| s.parse().map_err(|_| bad(s)))
            .collect::<Result<_>>()?;
        idx.push(mi);
        rho.push(
            cols[2 * dim]
                .parse::<f64>()
                .map_err(|_| bad(cols[2 * dim]))?,
        );
        for (i, comp) in u.iter_mut().enumerate() {
            let s = cols[2 * dim + 1 + i];
            comp.push(s.parse::<f64>().map_err(|_| bad(s))?);
        }
    }
    let cells_per_axis: Vec<usize> = (0..dim)
        .map(|a| idx.iter().map(|m| m[a] + 1).max().unwrap_or(0))
        .collect();
    let mesh = Mesh::new(dim, &cells_per_axis)?;
    check_len(mesh.cell_count(), rho.len())?;
    for (c, m) in idx.iter().enumerate() {
        if mesh.cell_index(m) != c {
            return Err(Error::Csv(format!(
                "row {} out of lexicographic order",
                c + 2
            )));
        }
    }
    Ok(Snapshot {
        cells_per_axis,
        rho: ScalarField { values: rho },
        u: VectorField {
            components: u.into_iter().map(|values| ScalarField { values }).collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellId;
    use std::f64::consts::PI;

    #[test]
    fn constants_are_reproduced() {
        let m = Mesh::uniform(2, 5).unwrap();
        let r = project_cell(&m, Quadrature::default(), |_| 5.0);
        assert!(r.values.iter().all(|&v| v == 5.0));
        let q = project_dual(&m, Quadrature::default(), |_| vec![1.0, 1.0]);
        for f in &q {
            assert!(f.values.iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn linear_cell_means_on_ring() {
        let m = Mesh::uniform(1, 4).unwrap();
        let r = project_cell(&m, Quadrature::default(), |x| x[0]);
        let expected = [0.125, 0.375, 0.625, 0.875];
        for (v, e) in r.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn dual_mean_of_linear_function() {
        let m = Mesh::uniform(1, 4).unwrap();
        let q = project_dual_axis(&m, Quadrature::default(), 0, |x| x[0]);
        assert!((q[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dual_mean_is_mean_of_half_cells() {
        let m = Mesh::uniform(2, 6).unwrap();
        let f = |x: &[f64]| (2.0 * PI * x[0]).sin() + x[1];
        let quad = Quadrature {
            samples_per_axis: 8,
        };
        let q = project_dual_axis(&m, quad, 0, f);
        // half-cell means with the same sample density
        let half = Quadrature {
            samples_per_axis: 4,
        };
        for c in 0..m.cell_count() {
            let mut lo = m.cell_origin(c);
            let mut w = vec![m.h_axis(0), m.h_axis(1)];
            w[0] *= 0.5;
            lo[0] += 0.5 * m.h_axis(0);
            let right_half_of_k = half.box_mean(&lo, &w, &mut |x| f(x));
            lo[0] += 0.5 * m.h_axis(0);
            let left_half_of_l = half.box_mean(&lo, &w, &mut |x| f(x));
            assert!((q[c] - 0.5 * (right_half_of_k + left_half_of_l)).abs() < 1e-13);
        }
    }

    #[test]
    fn experiment_density_integrates_to_two() {
        let m = Mesh::uniform(2, 32).unwrap();
        let r = project_cell(&m, Quadrature::default(), |x| {
            2.0 + (2.0 * PI * (x[0] + x[1])).cos()
        });
        let total: f64 = r.values.iter().sum::<f64>() * m.cell_volume();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn traces_on_ring() {
        let m = Mesh::uniform(1, 2).unwrap();
        let r = ScalarField::from_vec(&m, vec![1.0, 3.0]).unwrap();
        let t = trace(
            &m,
            &r,
            FaceId {
                axis: 0,
                owner: CellId(0),
            },
        );
        assert_eq!(
            (t.inner, t.outer, t.jump(), t.average()),
            (1.0, 3.0, 2.0, 2.0)
        );
        let t = trace(
            &m,
            &r,
            FaceId {
                axis: 0,
                owner: CellId(1),
            },
        );
        assert_eq!((t.inner, t.outer, t.jump()), (3.0, 1.0, -2.0));

        let c = ScalarField::constant(&m, 7.0);
        let t = trace(
            &m,
            &c,
            FaceId {
                axis: 0,
                owner: CellId(1),
            },
        );
        assert_eq!((t.jump(), t.average()), (0.0, 7.0));
    }

    #[test]
    fn restriction_preserves_means() {
        let coarse = Mesh::uniform(2, 4).unwrap();
        let fine = Mesh::uniform(2, 16).unwrap();
        let f = |x: &[f64]| 1.0 + x[0] * x[1];
        let quad = Quadrature {
            samples_per_axis: 1,
        };
        let rf = project_cell(&fine, quad, f);
        let rc = restrict(&coarse, &fine, &rf).unwrap();
        let direct = project_cell(
            &coarse,
            Quadrature {
                samples_per_axis: 4,
            },
            f,
        );
        for (a, b) in rc.values.iter().zip(&direct.values) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(restrict(&Mesh::uniform(2, 3).unwrap(), &fine, &rf).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let m = Mesh::new(2, &[3, 2]).unwrap();
        let rho = ScalarField::from_vec(&m, (0..6).map(|i| 1.0 + 0.1 * i as f64 / 3.0).collect())
            .unwrap();
        let u = VectorField::from_components(&m, vec![rho.map(|v| v.sin()), rho.map(|v| -v.exp())])
            .unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &m, &rho, &u).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i,j,x,y,rho,u1,u2\n"));
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back.cells_per_axis, vec![3, 2]);
        assert_eq!(back.rho, rho);
        assert_eq!(back.u, u);
    }
}
