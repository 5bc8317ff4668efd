//! Coordinate charts: a box of coordinates, a coordinate interpretation, and
//! a sampling grid used by finite-difference stencils and sup-norm sweeps.

use crate::error::{Error, Result};
use crate::tensor::MAX_DIM;

/// Coordinates of a point in a chart; inactive axes stay zero.
pub type Point = [f64; MAX_DIM];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordinateKind {
    /// (X, Y) or (X, Y, Z)
    Cartesian,
    /// (R, Theta), R > 0
    Polar,
    /// (R, Theta, Z), R > 0
    Cylindrical,
    /// (R, Theta, Phi) with polar angle Theta in (0, pi), R > 0
    Spherical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    dim: usize,
    kind: CoordinateKind,
    bounds: [[f64; 2]; MAX_DIM],
    grid_shape: [usize; MAX_DIM],
}

impl Chart {
    pub fn new(
        kind: CoordinateKind,
        dim: usize,
        bounds: &[[f64; 2]],
        grid_shape: &[usize],
    ) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::DimensionMismatch { expected: 2, got: dim });
        }
        if bounds.len() != dim || grid_shape.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: bounds.len().min(grid_shape.len()) });
        }
        let mut b = [[0.0; 2]; MAX_DIM];
        let mut n = [1usize; MAX_DIM];
        for a in 0..dim {
            let [lo, hi] = bounds[a];
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidInput(format!(
                    "bounds on axis {a} must be finite with lo < hi, got [{lo}, {hi}]"
                )));
            }
            if grid_shape[a] < 5 {
                return Err(Error::StencilOutOfBounds(format!(
                    "axis {a} has {} samples, need at least 5",
                    grid_shape[a]
                )));
            }
            b[a] = [lo, hi];
            n[a] = grid_shape[a];
        }
        let radial = matches!(
            kind,
            CoordinateKind::Polar | CoordinateKind::Cylindrical | CoordinateKind::Spherical
        );
        if radial && b[0][0] <= 0.0 {
            return Err(Error::NonPositiveRadius(b[0][0]));
        }
        if kind == CoordinateKind::Spherical {
            let eps = 1e-12;
            if b[1][0] <= eps || b[1][1] >= std::f64::consts::PI - eps {
                return Err(Error::InvalidInput(
                    "spherical polar angle must stay inside (0, pi)".into(),
                ));
            }
        }
        let expected = match kind {
            CoordinateKind::Cartesian => dim,
            CoordinateKind::Polar => 2,
            CoordinateKind::Cylindrical | CoordinateKind::Spherical => 3,
        };
        if dim != expected {
            return Err(Error::DimensionMismatch { expected, got: dim });
        }
        Ok(Chart { dim, kind, bounds: b, grid_shape: n })
    }

    pub fn cartesian_2d(bounds: [[f64; 2]; 2], shape: [usize; 2]) -> Result<Self> {
        Chart::new(CoordinateKind::Cartesian, 2, &bounds, &shape)
    }

    pub fn cartesian_3d(bounds: [[f64; 2]; 3], shape: [usize; 3]) -> Result<Self> {
        Chart::new(CoordinateKind::Cartesian, 3, &bounds, &shape)
    }

    pub fn polar(r: [f64; 2], theta: [f64; 2], shape: [usize; 2]) -> Result<Self> {
        Chart::new(CoordinateKind::Polar, 2, &[r, theta], &shape)
    }

    /// Annulus R in [r0, r1] with the angle covering a full turn.
    pub fn annulus(r: [f64; 2], shape: [usize; 2]) -> Result<Self> {
        Chart::polar(r, [0.0, 2.0 * std::f64::consts::PI], shape)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> CoordinateKind {
        self.kind
    }

    pub fn bounds(&self, axis: usize) -> [f64; 2] {
        self.bounds[axis]
    }

    pub fn grid_shape(&self, axis: usize) -> usize {
        self.grid_shape[axis]
    }

    /// Grid spacing along an axis; also the default finite-difference step.
    pub fn step(&self, axis: usize) -> f64 {
        let [lo, hi] = self.bounds[axis];
        (hi - lo) / (self.grid_shape[axis] - 1) as f64
    }

    pub fn node(&self, idx: [usize; MAX_DIM]) -> Point {
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = self.bounds[a][0] + idx[a] as f64 * self.step(a);
        }
        p
    }

    /// All grid nodes, innermost axis fastest.
    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        self.nodes_with_margin(0)
    }

    /// Grid nodes at least `margin` cells away from every boundary.
    pub fn nodes_with_margin(&self, margin: usize) -> impl Iterator<Item = Point> + '_ {
        let n = self.grid_shape;
        let dim = self.dim;
        let ranges: Vec<std::ops::Range<usize>> = (0..MAX_DIM)
            .map(|a| {
                if a < dim {
                    if n[a] > 2 * margin {
                        margin..n[a] - margin
                    } else {
                        0..0
                    }
                } else {
                    0..1
                }
            })
            .collect();
        let (r0, r1, r2) = (ranges[0].clone(), ranges[1].clone(), ranges[2].clone());
        r0.flat_map(move |i| {
            let r1 = r1.clone();
            let r2 = r2.clone();
            r1.flat_map(move |j| r2.clone().map(move |k| (i, j, k)))
        })
        .map(move |(i, j, k)| self.node([i, j, k]))
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim).all(|a| {
            let [lo, hi] = self.bounds[a];
            let slack = 1e-9 * (hi - lo);
            x[a] >= lo - slack && x[a] <= hi + slack
        })
    }

    /// Euclidean diameter of the region covered by the chart (an upper bound
    /// for angular charts); used to scale curvature residuals.
    pub fn diameter(&self) -> f64 {
        match self.kind {
            CoordinateKind::Cartesian => {
                (0..self.dim).map(|a| (self.bounds[a][1] - self.bounds[a][0]).powi(2)).sum::<f64>().sqrt()
            }
            CoordinateKind::Polar | CoordinateKind::Spherical => 2.0 * self.bounds[0][1],
            CoordinateKind::Cylindrical => {
                let dz = self.bounds[2][1] - self.bounds[2][0];
                ((2.0 * self.bounds[0][1]).powi(2) + dz * dz).sqrt()
            }
        }
    }

    /// True for a polar chart whose angle spans the full turn, which makes
    /// the region multiply connected.
    pub fn is_full_annulus(&self) -> bool {
        self.kind == CoordinateKind::Polar
            && self.bounds[1][1] - self.bounds[1][0] >= 2.0 * std::f64::consts::PI - 1e-9
    }

    pub fn expect_same(&self, other: &Chart) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ChartMismatch(format!(
                "{:?} {}d {:?} vs {:?} {}d {:?}",
                self.kind, self.dim, &self.bounds[..self.dim],
                other.kind, other.dim, &other.bounds[..other.dim]
            )))
        }
    }

    pub fn expect_dim(&self, dim: usize) -> Result<()> {
        if self.dim == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: dim, got: self.dim })
        }
    }

    pub fn expect_kind(&self, kind: CoordinateKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::ChartMismatch(format!("expected {:?} chart, got {:?}", kind, self.kind)))
        }
    }
}
