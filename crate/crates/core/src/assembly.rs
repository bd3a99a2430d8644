//! Matrix assembly: overlap, kinetic + distortion, and delta-site terms over
//! the primitive basis, then the transformation to the orthonormal basis.
//!
//! Quadrature matrices are assembled from angular Fourier moments. For a
//! basis pair the θ-integrand is `e^{i(m_k - m_j)θ}` times a function that
//! does not depend on the pair, so at each longitudinal node the θ-sums are
//! computed once per harmonic `d = m_k - m_j ∈ [-2M, 2M]` and reused. The
//! result is the same discrete sum [`kinetic_distortion_matrix_direct`]
//! evaluates node by node.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::basis::{eval_h_xi, eval_xi, BasisIndex, BasisKind, BasisSpec};
use crate::error::{Error, Result};
use crate::geometry::{SurfacePoint, TubeGeometry};
use crate::linalg::{gram_schmidt, CMatrix, OrthonormalBasis, OverlapMatrix};
use crate::quadrature::{surface_inner_product, QuadratureGrid};

/// Relative Hermiticity defect of the quadrature Hamiltonian above which assembly fails.
pub const MAX_RELATIVE_DEFECT: f64 = 1e-6;

/// Angular moments at one longitudinal node, indexed by `d + 2M`.
struct RingMoments {
    /// `Σ w e^{idθ} aλ`
    area: Vec<Complex64>,
    /// `Σ w e^{idθ} aλ V_D`
    potential: Vec<Complex64>,
    /// `Σ w e^{idθ} a/λ`
    longitudinal: Vec<Complex64>,
    /// `Σ w e^{idθ} aλ ∂_θ lnλ`
    angular_drift: Vec<Complex64>,
    /// `Σ w e^{idθ} (a/λ) ∂_s lnλ`
    longitudinal_drift: Vec<Complex64>,
}

fn unit_roots(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|r| {
            let (s, c) = (TAU * r as f64 / n as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

fn ring_moments(geom: &TubeGeometry, grid: &QuadratureGrid, roots: &[Complex64], s: f64, max_d: i64) -> RingMoments {
    let a = geom.radius();
    let nt = grid.n_theta();
    let wt = grid.theta_weight();
    let width = (2 * max_d + 1) as usize;
    let mut m = RingMoments {
        area: vec![Complex64::default(); width],
        potential: vec![Complex64::default(); width],
        longitudinal: vec![Complex64::default(); width],
        angular_drift: vec![Complex64::default(); width],
        longitudinal_drift: vec![Complex64::default(); width],
    };
    for (i, &theta) in grid.theta_nodes().iter().enumerate() {
        let p = SurfacePoint::new(theta, s);
        let lam = geom.lambda(p);
        let (dl_theta, dl_s) = geom.log_lambda_gradient(p);
        let f_area = wt * a * lam;
        let f_pot = f_area * geom.distortion_potential(p);
        let f_long = wt * a / lam;
        let f_ang = f_area * dl_theta;
        let f_ldrift = f_long * dl_s;
        for (slot, d) in (-max_d..=max_d).enumerate() {
            let e = roots[(d * i as i64).rem_euclid(nt as i64) as usize];
            m.area[slot] += e * f_area;
            m.potential[slot] += e * f_pot;
            m.longitudinal[slot] += e * f_long;
            m.angular_drift[slot] += e * f_ang;
            m.longitudinal_drift[slot] += e * f_ldrift;
        }
    }
    m
}

/// Overlap and (unsymmetrized) kinetic + distortion matrices over ξ.
fn quadrature_matrices(geom: &TubeGeometry, grid: &QuadratureGrid, spec: &BasisSpec) -> Result<(CMatrix, CMatrix)> {
    grid.check_angular_resolution(spec.max_m())?;
    if (grid.breakpoints().last().copied().unwrap_or(0.0) - geom.length()).abs() > 1e-9 * geom.length() {
        return Err(Error::InvalidGrid("grid length does not match the tube".into()));
    }
    let max_d = 2 * spec.max_m() as i64;
    let roots = unit_roots(grid.n_theta());
    let moments: Vec<RingMoments> =
        grid.s_nodes().par_iter().map(|&s| ring_moments(geom, grid, &roots, s, max_d)).collect();

    let idx: Vec<BasisIndex> = spec.indices().collect();
    let n = idx.len();
    let a2 = geom.radius().powi(2);
    let c = geom.hbar2_over_2m();
    let (sines, cosines): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (1..=spec.max_n())
        .map(|nn| {
            let k = spec.wavenumber(nn);
            grid.s_nodes().iter().map(|&s| (k * s).sin_cos()).unzip()
        })
        .unzip();

    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let bj = idx[j];
            let sin_j = &sines[bj.n as usize - 1];
            let mut srow = vec![Complex64::default(); n];
            let mut hrow = vec![Complex64::default(); n];
            for (kk, bk) in idx.iter().enumerate() {
                let slot = (bk.m as i64 - bj.m as i64 + max_d) as usize;
                let sin_k = &sines[bk.n as usize - 1];
                let cos_k = &cosines[bk.n as usize - 1];
                let mk = bk.m as f64;
                let wk = spec.wavenumber(bk.n);
                let centrifugal = c * mk * mk / a2;
                let drift = Complex64::new(0.0, -c * mk / a2);
                let stiffness = c * wk * wk;
                let mut s_acc = Complex64::default();
                let mut h_acc = Complex64::default();
                for (q, w) in grid.s_weights().iter().enumerate() {
                    let mo = &moments[q];
                    let ws = w * sin_j[q];
                    s_acc += ws * sin_k[q] * mo.area[slot];
                    let along = centrifugal * mo.area[slot]
                        + drift * mo.angular_drift[slot]
                        + stiffness * mo.longitudinal[slot]
                        + mo.potential[slot];
                    h_acc += ws * (along * sin_k[q] + c * wk * cos_k[q] * mo.longitudinal_drift[slot]);
                }
                srow[kk] = s_acc;
                hrow[kk] = h_acc;
            }
            (srow, hrow)
        })
        .collect();

    let mut s = CMatrix::zeros(n, n);
    let mut h = CMatrix::zeros(n, n);
    for (j, (srow, hrow)) in rows.into_iter().enumerate() {
        for k in 0..n {
            s[(j, k)] = srow[k];
            h[(j, k)] = hrow[k];
        }
    }
    // S is Hermitian in exact arithmetic; mirror the upper triangle.
    for j in 0..n {
        s[(j, j)].im = 0.0;
        for k in j + 1..n {
            s[(k, j)] = s[(j, k)].conj();
        }
    }
    Ok((s, h))
}

/// `S_{jk} = ⟨ξ_j, ξ_k⟩`.
pub fn overlap_matrix(geom: &TubeGeometry, grid: &QuadratureGrid, spec: &BasisSpec) -> Result<OverlapMatrix> {
    let (s, _) = quadrature_matrices(geom, grid, spec)?;
    OverlapMatrix::new(s)
}

/// Kinetic + distortion matrix over ξ with its Hermiticity defect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KineticMatrix {
    /// Hermitized `(H + H†)/2`, meV·nm².
    pub matrix: CMatrix,
    /// `max|H − H†| / max|H|` before Hermitization.
    pub relative_defect: f64,
}

/// `(H_ξ)_{jk} = ⟨ξ_j, H ξ_k⟩`, Hermitized with the defect recorded.
pub fn kinetic_distortion_matrix(
    geom: &TubeGeometry,
    grid: &QuadratureGrid,
    spec: &BasisSpec,
) -> Result<KineticMatrix> {
    let (_, h) = quadrature_matrices(geom, grid, spec)?;
    hermitize(h)
}

fn hermitize(h: CMatrix) -> Result<KineticMatrix> {
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let relative_defect = h.hermitian_defect() / scale;
    if relative_defect > MAX_RELATIVE_DEFECT {
        return Err(Error::NotHermitian { defect: relative_defect, limit: MAX_RELATIVE_DEFECT });
    }
    Ok(KineticMatrix { matrix: h.hermitian_part(), relative_defect })
}

/// Node-by-node evaluation of the same matrix through
/// [`surface_inner_product`] and [`eval_h_xi`]. Slow; kept as a cross-check.
pub fn kinetic_distortion_matrix_direct(
    geom: &TubeGeometry,
    grid: &QuadratureGrid,
    spec: &BasisSpec,
) -> Result<KineticMatrix> {
    grid.check_angular_resolution(spec.max_m())?;
    let idx: Vec<BasisIndex> = spec.indices().collect();
    let n = idx.len();
    let mut h = CMatrix::zeros(n, n);
    for (j, &bj) in idx.iter().enumerate() {
        for (k, &bk) in idx.iter().enumerate() {
            h[(j, k)] = surface_inner_product(geom, grid, |p| eval_xi(spec, bj, p), |p| eval_h_xi(geom, spec, bk, p));
        }
    }
    hermitize(h)
}

/// How delta sites are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arrangement {
    /// Rings of dimer pairs; alternate rings shifted by half the pair period.
    Armchair,
    /// Evenly spaced sites; alternate rings shifted by half the site spacing.
    Staggered,
    /// Evenly spaced sites at the same angles on every ring.
    Aligned,
    /// Explicit site list.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSite {
    /// 1-based ring number `k`.
    pub ring: usize,
    /// 1-based position `j` on the ring.
    pub index: usize,
    /// Radians in `[0, 2π)`.
    pub theta: f64,
    /// nm in `(0, L)`.
    pub s: f64,
}

/// Point scatterers `V = -Λ₀ Σ δ(θ - θ_{jk}) δ(s - s_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSiteLattice {
    strength: f64,
    per_ring: usize,
    rings: usize,
    arrangement: Arrangement,
    sites: Vec<DeltaSite>,
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl DeltaSiteLattice {
    /// Rings at `s_k = kL/(N_r + 1)` with `per_ring` sites each.
    ///
    /// For an even `per_ring` the sites form `per_ring/2` dimer pairs, each
    /// pair split by a third of the pair period and centered on
    /// `2πp/(per_ring/2)`; every second ring is rotated by half a pair
    /// period. This is the circumferential pattern of an armchair tube wall
    /// and is symmetric under θ → −θ. An odd `per_ring` cannot be paired and
    /// falls back to [`DeltaSiteLattice::staggered`].
    pub fn armchair(strength: f64, per_ring: usize, rings: usize, length: f64) -> Result<Self> {
        if per_ring % 2 == 1 {
            let mut lat = Self::staggered(strength, per_ring, rings, length)?;
            lat.arrangement = Arrangement::Armchair;
            return Ok(lat);
        }
        Self::generated(strength, per_ring, rings, length, Arrangement::Armchair, |j, k| {
            let pairs = per_ring / 2;
            let period = TAU / pairs as f64;
            let pair = (j - 1) / 2;
            let side = if (j - 1) % 2 == 0 { -1.0 } else { 1.0 };
            let shift = ((k - 1) % 2) as f64 * 0.5 * period;
            pair as f64 * period + shift + side * period / 6.0
        })
    }

    pub fn staggered(strength: f64, per_ring: usize, rings: usize, length: f64) -> Result<Self> {
        Self::generated(strength, per_ring, rings, length, Arrangement::Staggered, |j, k| {
            TAU * (j - 1) as f64 / per_ring as f64 + ((k - 1) % 2) as f64 * PI / per_ring as f64
        })
    }

    pub fn aligned(strength: f64, per_ring: usize, rings: usize, length: f64) -> Result<Self> {
        Self::generated(strength, per_ring, rings, length, Arrangement::Aligned, |j, _| {
            TAU * (j - 1) as f64 / per_ring as f64
        })
    }

    fn generated(
        strength: f64,
        per_ring: usize,
        rings: usize,
        length: f64,
        arrangement: Arrangement,
        angle: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        if per_ring == 0 || rings == 0 {
            return Err(Error::InvalidLattice("need at least one ring and one site per ring".into()));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidLattice(format!("length must be positive, got {length}")));
        }
        let spacing = length / (rings + 1) as f64;
        let mut sites = Vec::with_capacity(per_ring * rings);
        for k in 1..=rings {
            for j in 1..=per_ring {
                sites.push(DeltaSite { ring: k, index: j, theta: wrap_angle(angle(j, k)), s: k as f64 * spacing });
            }
        }
        Self::checked(strength, per_ring, rings, arrangement, sites, length)
    }

    /// Explicit `(θ, s)` sites, numbered as one ring.
    pub fn custom(strength: f64, sites: &[(f64, f64)], length: f64) -> Result<Self> {
        let list = sites
            .iter()
            .enumerate()
            .map(|(i, &(theta, s))| DeltaSite { ring: 1, index: i + 1, theta: wrap_angle(theta), s })
            .collect();
        Self::checked(strength, sites.len(), 1, Arrangement::Custom, list, length)
    }

    fn checked(
        strength: f64,
        per_ring: usize,
        rings: usize,
        arrangement: Arrangement,
        sites: Vec<DeltaSite>,
        length: f64,
    ) -> Result<Self> {
        if !strength.is_finite() {
            return Err(Error::InvalidLattice(format!("strength must be finite, got {strength}")));
        }
        if let Some(bad) = sites.iter().find(|site| !(site.s > 0.0 && site.s < length && site.theta.is_finite())) {
            return Err(Error::InvalidLattice(format!(
                "site at (theta = {}, s = {}) lies outside the open tube (0, {length})",
                bad.theta, bad.s
            )));
        }
        Ok(Self { strength, per_ring, rings, arrangement, sites })
    }

    /// Same sites with a different strength.
    pub fn with_strength(&self, strength: f64) -> Self {
        Self { strength, ..self.clone() }
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn per_ring(&self) -> usize {
        self.per_ring
    }

    pub fn rings(&self) -> usize {
        self.rings
    }

    pub fn arrangement(&self) -> Arrangement {
        self.arrangement
    }

    pub fn sites(&self) -> &[DeltaSite] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// True when every site has a mirror partner at `-θ` on the same ring position.
    pub fn is_reflection_symmetric(&self) -> bool {
        self.sites.iter().all(|a| {
            self.sites.iter().any(|b| {
                (b.s - a.s).abs() < 1e-12 && {
                    let d = wrap_angle(a.theta + b.theta);
                    d < 1e-12 || TAU - d < 1e-12
                }
            })
        })
    }
}

/// `V_{jk} = -Λ₀ Σ_sites a λ conj(ξ_j) ξ_k` at the site positions (meV·nm²).
pub fn delta_matrix(geom: &TubeGeometry, spec: &BasisSpec, lattice: &DeltaSiteLattice) -> CMatrix {
    let idx: Vec<BasisIndex> = spec.indices().collect();
    let n = idx.len();
    let a = geom.radius();
    // Per site: weight and basis values.
    let values: Vec<(f64, Vec<Complex64>)> = lattice
        .sites()
        .iter()
        .map(|site| {
            let p = SurfacePoint::new(site.theta, site.s);
            let w = -lattice.strength() * a * geom.lambda(p);
            (w, idx.iter().map(|&b| eval_xi(spec, b, p)).collect())
        })
        .collect();
    let mut v = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let mut acc = Complex64::default();
            for (w, xi) in &values {
                acc += *w * xi[j].conj() * xi[k];
            }
            if j == k {
                acc.im = 0.0;
            }
            v[(j, k)] = acc;
            v[(k, j)] = acc.conj();
        }
    }
    v
}

/// Columns: ξ-coefficients of the real functions `cos(mθ)` (m ≥ 0) and
/// `sin(|m|θ)` (m < 0), in the same flat order.
pub fn real_basis_transform(spec: &BasisSpec) -> CMatrix {
    let n = spec.size();
    let mut u = CMatrix::zeros(n, n);
    for b in spec.indices() {
        let col = b.j - 1;
        if b.m == 0 {
            u[(col, col)] = Complex64::new(1.0, 0.0);
            continue;
        }
        let mm = b.m.abs();
        let plus = spec.flat(mm, b.n).expect("in range") - 1;
        let minus = spec.flat(-mm, b.n).expect("in range") - 1;
        if b.m > 0 {
            u[(plus, col)] = Complex64::new(0.5, 0.0);
            u[(minus, col)] = Complex64::new(0.5, 0.0);
        } else {
            u[(plus, col)] = Complex64::new(0.0, -0.5);
            u[(minus, col)] = Complex64::new(0.0, 0.5);
        }
    }
    u
}

fn to_real_basis(u: &CMatrix, m: &CMatrix) -> CMatrix {
    let r = &(&u.adjoint() * m) * u;
    CMatrix::from_fn(r.rows(), r.cols(), |i, j| Complex64::new(r[(i, j)].re, 0.0))
}

/// Complete Hamiltonian over the orthonormalized basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianMatrix {
    pub kind: BasisKind,
    /// Primitive-basis Hamiltonian including delta sites (meV·nm²).
    pub h_xi: CMatrix,
    /// Orthonormal-basis Hamiltonian (meV).
    pub h_phi: CMatrix,
    /// Relative Hermiticity defect of the quadrature matrix.
    pub asymmetry: f64,
    pub overlap: OverlapMatrix,
    pub basis: OrthonormalBasis,
    /// Maps primitive-basis coefficients (of `kind`) to complex ξ-coefficients.
    pub to_xi: CMatrix,
}

/// Builds `H_φ = T (H_ξ + V_ξ) T†`.
pub fn assemble(
    geom: &TubeGeometry,
    grid: &QuadratureGrid,
    spec: &BasisSpec,
    kind: BasisKind,
    lattice: Option<&DeltaSiteLattice>,
) -> Result<HamiltonianMatrix> {
    if (spec.length() - geom.length()).abs() > 1e-12 * geom.length() {
        return Err(Error::InvalidBasis("basis length does not match the tube".into()));
    }
    let (s, h) = quadrature_matrices(geom, grid, spec)?;
    let kinetic = hermitize(h)?;
    let mut h_xi = kinetic.matrix;
    if let Some(lat) = lattice {
        h_xi = h_xi.add(&delta_matrix(geom, spec, lat));
    }
    let (s, h_xi, to_xi) = match kind {
        BasisKind::Complex => (s, h_xi, CMatrix::identity(spec.size())),
        BasisKind::Real => {
            let u = real_basis_transform(spec);
            (to_real_basis(&u, &s), to_real_basis(&u, &h_xi), u)
        }
    };
    let overlap = OverlapMatrix::new(s)?;
    let basis = gram_schmidt(&overlap)?;
    let h_phi = basis.transform(&h_xi);
    Ok(HamiltonianMatrix { kind, h_xi, h_phi, asymmetry: kinetic.relative_defect, overlap, basis, to_xi })
}
