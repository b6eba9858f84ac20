//! Rectangle domains, the analytic Dirichlet sine eigenbasis, the midpoint
//! quadrature grid and the forward/inverse spectral transforms.
//!
//! On an axis-aligned rectangle the Dirichlet Laplacian diagonalizes in the
//! tensor sine family
//!
//! ```text
//! a_m(x) = prod_d sqrt(2/L_d) sin(m_d pi x_d / L_d),
//! lambda_m = pi^2 sum_d (m_d / L_d)^2,
//! ```
//!
//! so derivatives of trial-space elements are evaluated analytically and the
//! only spatial error left is quadrature of non-polynomial nonlinearities.
//!
//! Quadrature is the tensor midpoint rule on a uniform grid. For midpoint
//! nodes the discrete sine (and cosine) products are orthogonal exactly as
//! long as every mode index stays below the per-axis node count, which the
//! oversampling rule below guarantees; discrete orthonormality of the basis
//! therefore holds to rounding error.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::Error;
use crate::scalar::{real, Real};
use crate::Result;

/// Axis-aligned rectangle (or interval) with Dirichlet boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<S> {
    side_lengths: Vec<S>,
    convex: bool,
    hessian_constant: S,
}

impl<S: Real> Domain<S> {
    /// Rectangle with the given side lengths. Rectangles are convex, so the
    /// Hessian-vs-Laplacian comparison constant is 1.
    pub fn rectangle(side_lengths: &[S]) -> Result<Self> {
        Self::new(side_lengths, true, S::one())
    }

    /// Domain carrying an explicit Hessian comparison constant `H >= 1`
    /// (`|D^2 v|_2 <= H |Lap v|_2`). `H > 1` models a non-convex domain;
    /// it only feeds the exponent formulas, the discretized geometry is
    /// still the rectangle.
    pub fn with_hessian_constant(side_lengths: &[S], hessian_constant: S) -> Result<Self> {
        if hessian_constant < S::one() {
            return Err(Error::invalid(
                "hessian_constant",
                format!("must be >= 1, got {hessian_constant}"),
            ));
        }
        Self::new(side_lengths, hessian_constant == S::one(), hessian_constant)
    }

    fn new(side_lengths: &[S], convex: bool, hessian_constant: S) -> Result<Self> {
        let dim = side_lengths.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid(
                "dim",
                format!("only 1- and 2-dimensional grids are supported, got {dim}"),
            ));
        }
        for (d, &len) in side_lengths.iter().enumerate() {
            if !(len > S::zero()) || !len.is_finite() {
                return Err(Error::invalid(
                    "side_lengths",
                    format!("side {d} must be a positive finite length, got {len}"),
                ));
            }
        }
        if convex && hessian_constant != S::one() {
            return Err(Error::invalid(
                "hessian_constant",
                "convex domains carry H = 1".to_string(),
            ));
        }
        Ok(Domain {
            side_lengths: side_lengths.to_vec(),
            convex,
            hessian_constant,
        })
    }

    pub fn unit_square() -> Self {
        Self::rectangle(&[S::one(), S::one()]).expect("unit square is valid")
    }

    pub fn unit_interval() -> Self {
        Self::rectangle(&[S::one()]).expect("unit interval is valid")
    }

    pub fn dim(&self) -> usize {
        self.side_lengths.len()
    }

    pub fn side_lengths(&self) -> &[S] {
        &self.side_lengths
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn hessian_constant(&self) -> S {
        self.hessian_constant
    }

    /// Lebesgue measure of the rectangle.
    pub fn measure(&self) -> S {
        self.side_lengths
            .iter()
            .fold(S::one(), |acc, &len| acc * len)
    }
}

/// Uniform tensor midpoint grid. All nodes carry the same weight
/// `prod_d (L_d / G_d)`.
#[derive(Debug, Clone)]
pub struct QuadGrid<S> {
    axes: Vec<GridAxis<S>>,
    weight: S,
    node_count: usize,
}

#[derive(Debug, Clone)]
pub struct GridAxis<S> {
    pub nodes: Vec<S>,
    pub step: S,
}

impl<S: Real> QuadGrid<S> {
    fn build(domain: &Domain<S>, nodes_per_dim: &[usize]) -> Self {
        let mut axes = Vec::with_capacity(domain.dim());
        let mut weight = S::one();
        let mut node_count = 1;
        for (d, &g) in nodes_per_dim.iter().enumerate() {
            let len = domain.side_lengths()[d];
            let step = len / real::<S>(g as f64);
            let half = real::<S>(0.5);
            let nodes = (0..g)
                .map(|i| (real::<S>(i as f64) + half) * step)
                .collect();
            weight *= step;
            node_count *= g;
            axes.push(GridAxis { nodes, step });
        }
        QuadGrid {
            axes,
            weight,
            node_count,
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, d: usize) -> &GridAxis<S> {
        &self.axes[d]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes.len()).collect()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Uniform quadrature weight of every node.
    pub fn weight(&self) -> S {
        self.weight
    }

    /// Coordinates of the node with the given flat (row-major) index.
    pub fn coords(&self, flat: usize) -> Vec<S> {
        match self.axes.len() {
            1 => vec![self.axes[0].nodes[flat]],
            2 => {
                let gy = self.axes[1].nodes.len();
                vec![self.axes[0].nodes[flat / gy], self.axes[1].nodes[flat % gy]]
            }
            _ => unreachable!("grids are 1- or 2-dimensional"),
        }
    }

    /// Per-axis integer coordinates of a flat node index.
    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        match self.axes.len() {
            1 => vec![flat],
            2 => {
                let gy = self.axes[1].nodes.len();
                vec![flat / gy, flat % gy]
            }
            _ => unreachable!(),
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        match self.axes.len() {
            1 => idx[0],
            2 => idx[0] * self.axes[1].nodes.len() + idx[1],
            _ => unreachable!(),
        }
    }
}

/// Analytic Dirichlet-Laplacian eigenbasis on a rectangle plus quadrature
/// grid; the Galerkin trial space.
#[derive(Debug, Clone)]
pub struct EigenBasis<S> {
    domain: Domain<S>,
    modes_per_dim: usize,
    oversample: usize,
    /// Multi-indices sorted ascending by eigenvalue, ties lexicographic.
    modes: Vec<Vec<usize>>,
    eigenvalues: Vec<S>,
    /// Sorted position -> tensor layout position.
    tensor_of: Vec<usize>,
    grid: Arc<QuadGrid<S>>,
    /// Per axis: row m-1 holds the normalized 1-d eigenfunction
    /// sqrt(2/L) sin(m pi x / L) sampled on the axis nodes.
    phi: Vec<Array2<S>>,
    /// Per axis: first derivative of the rows of `phi`.
    dphi: Vec<Array2<S>>,
    /// Per axis: wavenumbers m pi / L.
    wavenumbers: Vec<Vec<S>>,
    id: u64,
}

impl<S: Real> EigenBasis<S> {
    /// Builds the basis with all tensor modes `1..=modes_per_dim` per axis.
    ///
    /// The grid has `oversample * modes_per_dim` nodes per axis, bumped to
    /// the next odd count so the domain center is a node. `oversample >= 2`
    /// keeps the node count at least `2 * modes_per_dim + 1`.
    pub fn build(domain: Domain<S>, modes_per_dim: usize, oversample: usize) -> Result<Self> {
        if modes_per_dim < 1 {
            return Err(Error::invalid("modes_per_dim", "must be >= 1".to_string()));
        }
        if oversample < 2 {
            return Err(Error::invalid(
                "oversample",
                format!("must be >= 2, got {oversample}"),
            ));
        }
        let dim = domain.dim();
        let nodes_per_dim: Vec<usize> = (0..dim)
            .map(|_| {
                let g = oversample * modes_per_dim;
                if g % 2 == 0 {
                    g + 1
                } else {
                    g
                }
            })
            .collect();
        let grid = Arc::new(QuadGrid::build(&domain, &nodes_per_dim));

        let pi = S::PI();
        let mut phi = Vec::with_capacity(dim);
        let mut dphi = Vec::with_capacity(dim);
        let mut wavenumbers = Vec::with_capacity(dim);
        for d in 0..dim {
            let len = domain.side_lengths()[d];
            let scale = (real::<S>(2.0) / len).sqrt();
            let nodes = &grid.axis(d).nodes;
            let g = nodes.len();
            let mut tbl = Array2::zeros((modes_per_dim, g));
            let mut dtbl = Array2::zeros((modes_per_dim, g));
            let mut ks = Vec::with_capacity(modes_per_dim);
            for m in 1..=modes_per_dim {
                let k = real::<S>(m as f64) * pi / len;
                ks.push(k);
                for (i, &x) in nodes.iter().enumerate() {
                    tbl[[m - 1, i]] = scale * (k * x).sin();
                    dtbl[[m - 1, i]] = scale * k * (k * x).cos();
                }
            }
            phi.push(tbl);
            dphi.push(dtbl);
            wavenumbers.push(ks);
        }

        // Tensor mode list, sorted by eigenvalue with lexicographic ties.
        let mut entries: Vec<(S, Vec<usize>, usize)> = Vec::new();
        match dim {
            1 => {
                for m in 1..=modes_per_dim {
                    let k = wavenumbers[0][m - 1];
                    entries.push((k * k, vec![m], m - 1));
                }
            }
            2 => {
                for m1 in 1..=modes_per_dim {
                    for m2 in 1..=modes_per_dim {
                        let kx = wavenumbers[0][m1 - 1];
                        let ky = wavenumbers[1][m2 - 1];
                        let tensor = (m1 - 1) * modes_per_dim + (m2 - 1);
                        entries.push((kx * kx + ky * ky, vec![m1, m2], tensor));
                    }
                }
            }
            _ => unreachable!(),
        }
        entries.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("eigenvalues are finite")
                .then_with(|| a.1.cmp(&b.1))
        });

        let eigenvalues: Vec<S> = entries.iter().map(|e| e.0).collect();
        let modes: Vec<Vec<usize>> = entries.iter().map(|e| e.1.clone()).collect();
        let tensor_of: Vec<usize> = entries.iter().map(|e| e.2).collect();

        let id = basis_fingerprint(&domain, modes_per_dim, oversample);
        Ok(EigenBasis {
            domain,
            modes_per_dim,
            oversample,
            modes,
            eigenvalues,
            tensor_of,
            grid,
            phi,
            dphi,
            wavenumbers,
            id,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn domain(&self) -> &Domain<S> {
        &self.domain
    }

    pub fn grid(&self) -> &Arc<QuadGrid<S>> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn modes_per_dim(&self) -> usize {
        self.modes_per_dim
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Vec<usize>] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[S] {
        &self.eigenvalues
    }

    /// Sorted position of a multi-index, if listed.
    pub fn mode_position(&self, mode: &[usize]) -> Option<usize> {
        self.modes.iter().position(|m| m == mode)
    }

    fn check_id(&self, other: u64) -> Result<()> {
        if other != self.id {
            return Err(Error::BasisMismatch {
                expected: self.id,
                found: other,
            });
        }
        Ok(())
    }

    /// Samples an analytic field on the quadrature grid.
    pub fn grid_function(&self, comps: usize, f: impl Fn(&[S], usize) -> S) -> GridFunction<S> {
        let n = self.grid.node_count();
        let mut values = Array2::zeros((n, comps));
        for node in 0..n {
            let x = self.grid.coords(node);
            for k in 0..comps {
                values[[node, k]] = f(&x, k);
            }
        }
        GridFunction {
            grid: Arc::clone(&self.grid),
            basis_id: self.id,
            values,
        }
    }

    /// Scatters the sorted coefficient column into the tensor layout.
    fn tensor_matrix(&self, c: &SpectralCoeffs<S>, comp: usize) -> Array2<S> {
        let m = self.modes_per_dim;
        match self.dim() {
            1 => {
                let mut out = Array2::zeros((m, 1));
                for (j, &tj) in self.tensor_of.iter().enumerate() {
                    out[[tj, 0]] = c.values[[j, comp]];
                }
                out
            }
            2 => {
                let mut out = Array2::zeros((m, m));
                for (j, &tj) in self.tensor_of.iter().enumerate() {
                    out[[tj / m, tj % m]] = c.values[[j, comp]];
                }
                out
            }
            _ => unreachable!(),
        }
    }

    fn gather_tensor(&self, t: &Array2<S>, out: &mut Array2<S>, comp: usize) {
        let m = self.modes_per_dim;
        for (j, &tj) in self.tensor_of.iter().enumerate() {
            let v = match self.dim() {
                1 => t[[tj, 0]],
                2 => t[[tj / m, tj % m]],
                _ => unreachable!(),
            };
            out[[j, comp]] = v;
        }
    }

    /// Nodal evaluation of the spectral sum; exact for any coefficients.
    pub fn synthesize(&self, c: &SpectralCoeffs<S>) -> Result<GridFunction<S>> {
        self.check_id(c.basis_id)?;
        let comps = c.comps();
        let n = self.grid.node_count();
        let mut values = Array2::zeros((n, comps));
        for comp in 0..comps {
            let ct = self.tensor_matrix(c, comp);
            let field = self.tables_apply(&ct, Deriv::None, Deriv::None);
            values.column_mut(comp).assign(&field);
        }
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            basis_id: self.id,
            values,
        })
    }

    /// Quadrature projection: coefficient j equals `<f, a_j>` on the grid.
    pub fn project(&self, f: &GridFunction<S>) -> Result<SpectralCoeffs<S>> {
        self.check_id(f.basis_id)?;
        let comps = f.comps();
        let w = self.grid.weight();
        let mut values = Array2::zeros((self.mode_count(), comps));
        for comp in 0..comps {
            let field = self.field_matrix(f, comp);
            let mut ct = match self.dim() {
                1 => self.phi[0].dot(&field),
                2 => self.phi[0].dot(&field).dot(&self.phi[1].t()),
                _ => unreachable!(),
            };
            ct.mapv_inplace(|v| v * w);
            self.gather_tensor(&ct, &mut values, comp);
        }
        Ok(SpectralCoeffs {
            basis_id: self.id,
            values,
        })
    }

    /// Term-wise analytic gradient; output channels ordered `comp * dim + d`.
    pub fn spectral_gradient(&self, c: &SpectralCoeffs<S>) -> Result<GridFunction<S>> {
        self.check_id(c.basis_id)?;
        let comps = c.comps();
        let dim = self.dim();
        let n = self.grid.node_count();
        let mut values = Array2::zeros((n, comps * dim));
        for comp in 0..comps {
            let ct = self.tensor_matrix(c, comp);
            for d in 0..dim {
                let (dx, dy) = if d == 0 {
                    (Deriv::First, Deriv::None)
                } else {
                    (Deriv::None, Deriv::First)
                };
                let field = self.tables_apply(&ct, dx, dy);
                values.column_mut(comp * dim + d).assign(&field);
            }
        }
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            basis_id: self.id,
            values,
        })
    }

    /// Term-wise analytic Hessian; channels ordered `comp * dim^2 + a * dim + b`.
    pub fn spectral_hessian(&self, c: &SpectralCoeffs<S>) -> Result<GridFunction<S>> {
        self.check_id(c.basis_id)?;
        let comps = c.comps();
        let dim = self.dim();
        let n = self.grid.node_count();
        let mut values = Array2::zeros((n, comps * dim * dim));
        for comp in 0..comps {
            let ct = self.tensor_matrix(c, comp);
            for a in 0..dim {
                for b in 0..dim {
                    let pick = |axis: usize| -> Deriv {
                        match (a == axis) as usize + (b == axis) as usize {
                            0 => Deriv::None,
                            1 => Deriv::First,
                            _ => Deriv::Second,
                        }
                    };
                    let field = self.tables_apply(&ct, pick(0), pick(1));
                    values.column_mut(comp * dim * dim + a * dim + b).assign(&field);
                }
            }
        }
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            basis_id: self.id,
            values,
        })
    }

    /// Nodal Laplacian, computed as the synthesis of `-lambda_j c_j`.
    pub fn spectral_laplacian(&self, c: &SpectralCoeffs<S>) -> Result<GridFunction<S>> {
        let scaled = c.map_eigen(self, |lambda, v| -lambda * v)?;
        self.synthesize(&scaled)
    }

    /// Adjoint of the gradient under quadrature weights:
    /// `out_j = sum_d <flux[., comp*dim+d], d_d a_j>`.
    ///
    /// This is the Galerkin load pairing a nodal flux field against the
    /// gradients of the trial functions.
    pub fn project_gradient(&self, flux: &GridFunction<S>) -> Result<SpectralCoeffs<S>> {
        self.check_id(flux.basis_id)?;
        let dim = self.dim();
        if flux.comps() % dim != 0 {
            return Err(Error::invalid(
                "flux",
                format!(
                    "channel count {} is not a multiple of dim {dim}",
                    flux.comps()
                ),
            ));
        }
        let comps = flux.comps() / dim;
        let w = self.grid.weight();
        let mut values = Array2::zeros((self.mode_count(), comps));
        let mut acc = match self.dim() {
            1 => Array2::zeros((self.modes_per_dim, 1)),
            _ => Array2::zeros((self.modes_per_dim, self.modes_per_dim)),
        };
        for comp in 0..comps {
            acc.fill(S::zero());
            for d in 0..dim {
                let field = self.field_matrix_channel(flux, comp * dim + d);
                let part = match (self.dim(), d) {
                    (1, 0) => self.dphi[0].dot(&field),
                    (2, 0) => self.dphi[0].dot(&field).dot(&self.phi[1].t()),
                    (2, 1) => self.phi[0].dot(&field).dot(&self.dphi[1].t()),
                    _ => unreachable!(),
                };
                acc = acc + part;
            }
            acc.mapv_inplace(|v| v * w);
            self.gather_tensor(&acc, &mut values, comp);
        }
        Ok(SpectralCoeffs {
            basis_id: self.id,
            values,
        })
    }

    /// Full quadrature stiffness matrix `<grad a_i, grad a_j>`; diagnostic
    /// use only, the solver relies on its diagonal (the eigenvalues).
    pub fn assemble_stiffness(&self) -> Array2<S> {
        let k = self.mode_count();
        let mut out = Array2::zeros((k, k));
        for i in 0..k {
            let e = SpectralCoeffs::unit(self, i);
            let g = self
                .spectral_gradient(&e)
                .expect("basis-generated coefficients are consistent");
            let d = self
                .project_gradient(&g)
                .expect("basis-generated field is consistent");
            for j in 0..k {
                out[[j, i]] = d.values[[j, 0]];
            }
        }
        out
    }

    /// Applies the per-axis tables to a tensor coefficient block, with the
    /// requested derivative order per axis, returning flat nodal values.
    fn tables_apply(&self, ct: &Array2<S>, dx: Deriv, dy: Deriv) -> ndarray::Array1<S> {
        let table = |d: usize, which: Deriv| -> Array2<S> {
            match which {
                Deriv::None => self.phi[d].clone(),
                Deriv::First => self.dphi[d].clone(),
                Deriv::Second => {
                    let mut t = self.phi[d].clone();
                    for (m, mut row) in t.rows_mut().into_iter().enumerate() {
                        let k = self.wavenumbers[d][m];
                        let factor = -(k * k);
                        row.mapv_inplace(|v| v * factor);
                    }
                    t
                }
            }
        };
        match self.dim() {
            1 => {
                let tx = table(0, dx);
                let f = tx.t().dot(ct);
                ndarray::Array1::from_iter(f.column(0).iter().copied())
            }
            2 => {
                let tx = table(0, dx);
                let ty = table(1, dy);
                let f = tx.t().dot(ct).dot(&ty);
                ndarray::Array1::from_iter(f.iter().copied())
            }
            _ => unreachable!(),
        }
    }

    /// Nodal values of one channel reshaped to the grid tensor layout.
    fn field_matrix(&self, f: &GridFunction<S>, comp: usize) -> Array2<S> {
        self.field_matrix_channel(f, comp)
    }

    fn field_matrix_channel(&self, f: &GridFunction<S>, channel: usize) -> Array2<S> {
        let shape = self.grid.shape();
        match self.dim() {
            1 => {
                let mut out = Array2::zeros((shape[0], 1));
                for i in 0..shape[0] {
                    out[[i, 0]] = f.values[[i, channel]];
                }
                out
            }
            2 => {
                let (gx, gy) = (shape[0], shape[1]);
                let mut out = Array2::zeros((gx, gy));
                for ix in 0..gx {
                    for iy in 0..gy {
                        out[[ix, iy]] = f.values[[ix * gy + iy, channel]];
                    }
                }
                out
            }
            _ => unreachable!(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Deriv {
    None,
    First,
    Second,
}

/// Spectral coefficients of a (vector) field, indexed like the basis modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs<S> {
    basis_id: u64,
    /// Shape (mode_count, vector components).
    values: Array2<S>,
}

impl<S: Real> SpectralCoeffs<S> {
    pub fn zeros(basis: &EigenBasis<S>, comps: usize) -> Self {
        SpectralCoeffs {
            basis_id: basis.id(),
            values: Array2::zeros((basis.mode_count(), comps)),
        }
    }

    /// Scalar field equal to the j-th (sorted) basis function.
    pub fn unit(basis: &EigenBasis<S>, j: usize) -> Self {
        let mut c = Self::zeros(basis, 1);
        c.values[[j, 0]] = S::one();
        c
    }

    pub fn from_values(basis: &EigenBasis<S>, values: Array2<S>) -> Result<Self> {
        if values.nrows() != basis.mode_count() {
            return Err(Error::invalid(
                "values",
                format!(
                    "row count {} does not match mode count {}",
                    values.nrows(),
                    basis.mode_count()
                ),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "values",
                "coefficients must be finite".to_string(),
            ));
        }
        Ok(SpectralCoeffs {
            basis_id: basis.id(),
            values,
        })
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn comps(&self) -> usize {
        self.values.ncols()
    }

    pub fn mode_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<S> {
        &mut self.values
    }

    /// Frobenius norm of the coefficients; by orthonormality this equals the
    /// L^2 norm of the synthesized field.
    pub fn l2(&self) -> S {
        self.values
            .iter()
            .map(|&v| v * v)
            .fold(S::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn scaled(&self, s: S) -> Self {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v * s);
        out
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: S, other: &Self) -> Self {
        let mut out = self.clone();
        ndarray::Zip::from(&mut out.values)
            .and(&other.values)
            .for_each(|a, &b| *a += s * b);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-S::one(), other)
    }

    /// Maps each coefficient together with its eigenvalue.
    pub fn map_eigen(
        &self,
        basis: &EigenBasis<S>,
        f: impl Fn(S, S) -> S,
    ) -> Result<Self> {
        basis.check_id(self.basis_id)?;
        let mut out = self.clone();
        for (j, &lambda) in basis.eigenvalues().iter().enumerate() {
            for comp in 0..out.comps() {
                out.values[[j, comp]] = f(lambda, out.values[[j, comp]]);
            }
        }
        Ok(out)
    }
}

/// Nodal values of a (multi-channel) field on the quadrature grid.
#[derive(Debug, Clone)]
pub struct GridFunction<S> {
    grid: Arc<QuadGrid<S>>,
    basis_id: u64,
    /// Shape (node_count, channels).
    values: Array2<S>,
}

impl<S: Real> GridFunction<S> {
    pub fn grid(&self) -> &Arc<QuadGrid<S>> {
        &self.grid
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn comps(&self) -> usize {
        self.values.ncols()
    }

    pub fn node_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<S> {
        &mut self.values
    }

    /// Euclidean magnitude over all channels at one node.
    pub fn magnitude(&self, node: usize) -> S {
        self.magnitude_sq(node).sqrt()
    }

    pub fn magnitude_sq(&self, node: usize) -> S {
        let mut acc = S::zero();
        for c in 0..self.comps() {
            let v = self.values[[node, c]];
            acc += v * v;
        }
        acc
    }

    pub fn scaled(&self, s: S) -> Self {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v * s);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        ndarray::Zip::from(&mut out.values)
            .and(&other.values)
            .for_each(|a, &b| *a -= b);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

fn basis_fingerprint<S: Real>(domain: &Domain<S>, modes_per_dim: usize, oversample: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut push = |word: u64| {
        for byte in word.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    push(domain.dim() as u64);
    for &len in domain.side_lengths() {
        push(len.to_f64().expect("finite side length").to_bits());
    }
    push(modes_per_dim as u64);
    push(oversample as u64);
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    type B = EigenBasis<f64>;

    fn unit_square_basis(modes: usize, oversample: usize) -> B {
        B::build(Domain::unit_square(), modes, oversample).unwrap()
    }

    #[test]
    fn eigenvalues_match_analytic_values() {
        let basis = unit_square_basis(4, 2);
        let pi2 = std::f64::consts::PI.powi(2);
        let j11 = basis.mode_position(&[1, 1]).unwrap();
        let j21 = basis.mode_position(&[2, 1]).unwrap();
        assert!((basis.eigenvalues()[j11] - 2.0 * pi2).abs() < 1e-12);
        assert!((basis.eigenvalues()[j21] - 5.0 * pi2).abs() < 1e-12);
        // first listed mode is (1,1)
        assert_eq!(basis.modes()[0], vec![1, 1]);
    }

    #[test]
    fn eigenvalues_are_nondecreasing_with_lexicographic_ties() {
        let basis = unit_square_basis(5, 2);
        for w in basis.eigenvalues().windows(2) {
            assert!(w[0] <= w[1]);
        }
        // (1,2) and (2,1) tie on the square; lexicographic order breaks it
        let p12 = basis.mode_position(&[1, 2]).unwrap();
        let p21 = basis.mode_position(&[2, 1]).unwrap();
        assert!(p12 < p21);
    }

    #[test]
    fn grid_is_oversampled_and_centered() {
        let basis = unit_square_basis(4, 2);
        let shape = basis.grid().shape();
        assert!(shape[0] >= 2 * 4 + 1);
        assert_eq!(shape[0] % 2, 1);
        // center of the square is a node
        let mid = shape[0] / 2;
        let x = basis.grid().axis(0).nodes[mid];
        assert!((x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn discrete_orthonormality_holds_to_1e12() {
        let basis = unit_square_basis(6, 2);
        let k = basis.mode_count();
        let w = basis.grid().weight();
        let mut fields = Vec::with_capacity(k);
        for j in 0..k {
            let c = SpectralCoeffs::unit(&basis, j);
            fields.push(basis.synthesize(&c).unwrap());
        }
        for i in 0..k {
            for j in i..k {
                let mut ip = 0.0;
                for node in 0..basis.grid().node_count() {
                    ip += fields[i].values()[[node, 0]] * fields[j].values()[[node, 0]];
                }
                ip *= w;
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (ip - expect).abs() < 1e-12,
                    "<a_{i}, a_{j}> = {ip}, expected {expect}"
                );
            }
        }
    }

    #[test]
    fn first_mode_matches_closed_form() {
        let basis = unit_square_basis(3, 2);
        let j = basis.mode_position(&[1, 1]).unwrap();
        let c = SpectralCoeffs::unit(&basis, j);
        let f = basis.synthesize(&c).unwrap();
        let pi = std::f64::consts::PI;
        for node in 0..f.node_count() {
            let x = basis.grid().coords(node);
            let expect = 2.0 * (pi * x[0]).sin() * (pi * x[1]).sin();
            assert!((f.values()[[node, 0]] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn projection_recovers_basis_functions_and_linearity() {
        let basis = unit_square_basis(4, 2);
        let f1 = basis.synthesize(&SpectralCoeffs::unit(&basis, 0)).unwrap();
        let c1 = basis.project(&f1).unwrap();
        for j in 0..basis.mode_count() {
            let expect = if j == 0 { 1.0 } else { 0.0 };
            assert!((c1.values()[[j, 0]] - expect).abs() < 1e-12);
        }

        // f = 3 a_2 - a_5 (sorted indices 1 and 4)
        let combo = SpectralCoeffs::unit(&basis, 1)
            .scaled(3.0)
            .add_scaled(-1.0, &SpectralCoeffs::unit(&basis, 4));
        let f = basis.synthesize(&combo).unwrap();
        let c = basis.project(&f).unwrap();
        for j in 0..basis.mode_count() {
            let expect = match j {
                1 => 3.0,
                4 => -1.0,
                _ => 0.0,
            };
            assert!((c.values()[[j, 0]] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_on_band_limited_field() {
        let basis = unit_square_basis(5, 2);
        let mut values = Array2::zeros((basis.mode_count(), 1));
        for j in 0..basis.mode_count() {
            values[[j, 0]] = (0.3 + j as f64 * 0.17).sin();
        }
        let c = SpectralCoeffs::from_values(&basis, values).unwrap();
        let f = basis.synthesize(&c).unwrap();
        let w = basis.grid().weight();
        let l2_sq_grid: f64 = (0..f.node_count())
            .map(|i| f.values()[[i, 0]].powi(2) * w)
            .sum();
        let l2_sq_coeff = c.l2().powi(2);
        assert!((l2_sq_grid - l2_sq_coeff).abs() < 1e-12);
    }

    #[test]
    fn round_trip_is_identity_on_band_limited_fields() {
        let basis = unit_square_basis(4, 3);
        let j = basis.mode_position(&[2, 2]).unwrap();
        let c = SpectralCoeffs::unit(&basis, j);
        let f = basis.synthesize(&c).unwrap();
        let back = basis.project(&f).unwrap();
        let again = basis.synthesize(&back).unwrap();
        for node in 0..f.node_count() {
            assert!((f.values()[[node, 0]] - again.values()[[node, 0]]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_analytic_derivative() {
        let basis = unit_square_basis(3, 2);
        let j = basis.mode_position(&[1, 1]).unwrap();
        let c = SpectralCoeffs::unit(&basis, j);
        let g = basis.spectral_gradient(&c).unwrap();
        let pi = std::f64::consts::PI;
        for node in 0..g.node_count() {
            let x = basis.grid().coords(node);
            let gx = 2.0 * pi * (pi * x[0]).cos() * (pi * x[1]).sin();
            let gy = 2.0 * pi * (pi * x[0]).sin() * (pi * x[1]).cos();
            assert!((g.values()[[node, 0]] - gx).abs() < 1e-12);
            assert!((g.values()[[node, 1]] - gy).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_satisfies_eigen_relation() {
        let basis = unit_square_basis(4, 2);
        for j in [0usize, 3, 7] {
            let c = SpectralCoeffs::unit(&basis, j);
            let lap = basis.spectral_laplacian(&c).unwrap();
            let a = basis.synthesize(&c).unwrap();
            let lambda = basis.eigenvalues()[j];
            for node in 0..lap.node_count() {
                let expect = -lambda * a.values()[[node, 0]];
                assert!((lap.values()[[node, 0]] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hessian_trace_equals_laplacian() {
        let basis = unit_square_basis(5, 2);
        let mut values = Array2::zeros((basis.mode_count(), 1));
        for j in 0..basis.mode_count() {
            values[[j, 0]] = ((j * 7 + 3) % 11) as f64 / 11.0 - 0.5;
        }
        let c = SpectralCoeffs::from_values(&basis, values).unwrap();
        let hess = basis.spectral_hessian(&c).unwrap();
        let lap = basis.spectral_laplacian(&c).unwrap();
        for node in 0..lap.node_count() {
            let trace = hess.values()[[node, 0]] + hess.values()[[node, 3]];
            assert!((trace - lap.values()[[node, 0]]).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_adjoint_of_synthesis() {
        let basis = unit_square_basis(4, 2);
        let mut cv = Array2::zeros((basis.mode_count(), 1));
        for j in 0..basis.mode_count() {
            cv[[j, 0]] = (j as f64 * 0.37 + 0.11).cos();
        }
        let c = SpectralCoeffs::from_values(&basis, cv).unwrap();
        let f = basis.grid_function(1, |x, _| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.2);
        let synth = basis.synthesize(&c).unwrap();

        let w = basis.grid().weight();
        let lhs: f64 = (0..f.node_count())
            .map(|i| synth.values()[[i, 0]] * f.values()[[i, 0]] * w)
            .sum();
        let proj = basis.project(&f).unwrap();
        let rhs: f64 = (0..basis.mode_count())
            .map(|j| c.values()[[j, 0]] * proj.values()[[j, 0]])
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_transforms_work() {
        let basis = B::build(Domain::unit_interval(), 6, 2).unwrap();
        let j = basis.mode_position(&[2]).unwrap();
        let c = SpectralCoeffs::unit(&basis, j);
        let f = basis.synthesize(&c).unwrap();
        let pi = std::f64::consts::PI;
        for node in 0..f.node_count() {
            let x = basis.grid().coords(node)[0];
            let expect = 2f64.sqrt() * (2.0 * pi * x).sin();
            assert!((f.values()[[node, 0]] - expect).abs() < 1e-13);
        }
        let back = basis.project(&f).unwrap();
        assert!((back.values()[[j, 0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Domain::<f64>::rectangle(&[1.0, 1.0, 1.0]).is_err());
        assert!(Domain::<f64>::rectangle(&[1.0, -1.0]).is_err());
        assert!(Domain::<f64>::with_hessian_constant(&[1.0, 1.0], 0.5).is_err());
        assert!(B::build(Domain::unit_square(), 0, 2).is_err());
        assert!(B::build(Domain::unit_square(), 4, 1).is_err());
    }

    #[test]
    fn basis_mismatch_is_detected() {
        let a = unit_square_basis(3, 2);
        let b = unit_square_basis(4, 2);
        let c = SpectralCoeffs::unit(&a, 0);
        assert!(matches!(
            b.synthesize(&c),
            Err(Error::BasisMismatch { .. })
        ));
        let f = a.synthesize(&c).unwrap();
        assert!(b.project(&f).is_err());
    }

    #[test]
    fn stiffness_matrix_is_diagonal_with_eigenvalues() {
        let basis = unit_square_basis(3, 2);
        let k = basis.mode_count();
        let b = basis.assemble_stiffness();
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { basis.eigenvalues()[i] } else { 0.0 };
                assert!(
                    (b[[i, j]] - expect).abs() < 1e-12 * basis.eigenvalues()[k - 1].max(1.0),
                    "b[{i},{j}] = {}",
                    b[[i, j]]
                );
            }
        }
    }
}
