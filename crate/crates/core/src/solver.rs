//! End-to-end pipeline: geometry and basis in, sorted spectrum with parity
//! labels out.

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{parity_classify, ParityReport};
use crate::assembly::{assemble, DeltaSiteLattice, HamiltonianMatrix};
use crate::basis::{BasisKind, BasisSpec};
use crate::error::Result;
use crate::geometry::TubeGeometry;
use crate::linalg::{solve_self_adjoint, CMatrix, SpectralResult};
use crate::quadrature::{QuadratureGrid, QuadratureSpec};

/// Eigenvalues closer than this (times `max(1, max|H|)`) are treated as one
/// degenerate cluster when fixing parity.
pub const CLUSTER_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    pub geometry: TubeGeometry,
    pub max_m: u32,
    pub max_n: u32,
    pub quadrature: QuadratureSpec,
    pub kind: BasisKind,
    pub lattice: Option<DeltaSiteLattice>,
}

impl Problem {
    pub fn new(geometry: TubeGeometry, max_m: u32, max_n: u32) -> Self {
        Self { geometry, max_m, max_n, quadrature: QuadratureSpec::default(), kind: BasisKind::Complex, lattice: None }
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureSpec) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn with_kind(mut self, kind: BasisKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_lattice(mut self, lattice: Option<DeltaSiteLattice>) -> Self {
        self.lattice = lattice;
        self
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::for_geometry(self.max_m, self.max_n, &self.geometry)
    }

    pub fn grid(&self) -> Result<QuadratureGrid> {
        QuadratureGrid::for_geometry(&self.geometry, &self.quadrature)
    }

    pub fn solve(&self) -> Result<Solution> {
        let spec = self.basis()?;
        let grid = self.grid()?;
        let hamiltonian = assemble(&self.geometry, &grid, &spec, self.kind, self.lattice.as_ref())?;
        let mut spectrum = solve_in_primitive(&hamiltonian)?;
        let xi_overlap = complex_overlap(&hamiltonian);
        let tol = CLUSTER_TOLERANCE * hamiltonian.h_phi.max_abs().max(1.0);
        resolve_degenerate_parity(&mut spectrum, &spec, &xi_overlap, tol)?;
        let parities = (0..spectrum.len())
            .map(|k| parity_classify(&spectrum.xi_coefficients.column(k), &spec, &xi_overlap))
            .collect();
        Ok(Solution { problem: self.clone(), spec, grid, hamiltonian, xi_overlap, spectrum, parities })
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub problem: Problem,
    pub spec: BasisSpec,
    pub grid: QuadratureGrid,
    pub hamiltonian: HamiltonianMatrix,
    /// Overlap over the complex exponential basis, whatever basis was solved in.
    pub xi_overlap: CMatrix,
    /// `xi_coefficients` are always over the complex ξ basis.
    pub spectrum: SpectralResult,
    pub parities: Vec<ParityReport>,
}

impl Solution {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    /// ξ-coefficients of state `k` (0 = ground state).
    pub fn state(&self, k: usize) -> Result<Vec<Complex64>> {
        self.spectrum.state(k)
    }
}

fn solve_in_primitive(ham: &HamiltonianMatrix) -> Result<SpectralResult> {
    let eig = solve_self_adjoint(&ham.h_phi)?;
    let primitive = ham.basis.to_xi(&eig.vectors);
    Ok(SpectralResult {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        xi_coefficients: &ham.to_xi * &primitive,
        residuals: eig.residuals,
        asymmetry: eig.asymmetry,
    })
}

/// `S_ξ` recovered from the overlap of whichever basis was assembled.
fn complex_overlap(ham: &HamiltonianMatrix) -> CMatrix {
    let s = ham.overlap.matrix();
    match ham.kind {
        BasisKind::Complex => s.clone(),
        BasisKind::Real => {
            // χ = ξ U, so S_χ = U† S_ξ U and S_ξ = U^{-†} S_χ U^{-1}; U is
            // unitary up to the factor 1/2 on the m ≠ 0 columns.
            let u = &ham.to_xi;
            let n = u.rows();
            let mut uinv = u.adjoint();
            for j in 0..n {
                let col_norm: f64 = (0..n).map(|i| u[(i, j)].norm_sqr()).sum();
                for k in 0..n {
                    uinv[(j, k)] /= col_norm;
                }
            }
            (&(&uinv.adjoint() * s) * &uinv).hermitian_part()
        }
    }
}

/// Rotates each degenerate eigenvector cluster so that every member is an
/// eigenvector of the reflection θ → −θ.
fn resolve_degenerate_parity(
    spectrum: &mut SpectralResult,
    spec: &BasisSpec,
    overlap: &CMatrix,
    tol: f64,
) -> Result<()> {
    let perm = spec.reflection_permutation();
    let n = spectrum.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && spectrum.eigenvalues[end] - spectrum.eigenvalues[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            let size = end - start;
            let cols: Vec<Vec<Complex64>> = (start..end).map(|k| spectrum.xi_coefficients.column(k)).collect();
            let reflected: Vec<Vec<Complex64>> = cols
                .iter()
                .map(|c| {
                    let mut r = vec![Complex64::default(); c.len()];
                    for (i, &p) in perm.iter().enumerate() {
                        r[p] = c[i];
                    }
                    overlap.mul_vec(&r)
                })
                .collect();
            let q = CMatrix::from_fn(size, size, |a, b| crate::linalg::dot(&cols[a], &reflected[b]));
            let w = solve_self_adjoint(&q.hermitian_part())?.vectors;
            for target in [&mut spectrum.xi_coefficients, &mut spectrum.eigenvectors] {
                let old: Vec<Vec<Complex64>> = (start..end).map(|k| target.column(k)).collect();
                for a in 0..size {
                    let mut v = vec![Complex64::default(); old[0].len()];
                    for (b, col) in old.iter().enumerate() {
                        for (x, y) in v.iter_mut().zip(col) {
                            *x += w[(b, a)] * y;
                        }
                    }
                    target.set_column(start + a, &v);
                }
            }
        }
        start = end;
    }
    Ok(())
}

/// Closed-form cylinder levels `(m, n, ε)` for every basis function, ascending.
pub fn straight_tube_levels(geom: &TubeGeometry, spec: &BasisSpec) -> Vec<(i32, u32, f64)> {
    let c = geom.hbar2_over_2m();
    let a2 = geom.radius().powi(2);
    let mut levels: Vec<(i32, u32, f64)> = spec
        .indices()
        .map(|b| {
            let k = spec.wavenumber(b.n);
            (b.m, b.n, c * ((b.m * b.m) as f64 / a2 + k * k) - 0.25 * c / a2)
        })
        .collect();
    levels.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)));
    levels
}
