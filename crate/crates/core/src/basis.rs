//! Primitive basis `ξ_{mn}(θ,s) = e^{imθ} sin(nπs/L)`.
//!
//! Functions are addressed by a 1-based flat index `j` with `m` varying
//! fastest: `j = 1 ↔ (m=-M, n=1)`, `j = 2 ↔ (m=-M+1, n=1)`, …,
//! `j = (2M+1)N ↔ (m=M, n=N)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{SurfacePoint, TubeGeometry};

/// Which angular functions span the trial space.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// `e^{imθ}`, `m = -M..=M`.
    #[default]
    Complex,
    /// `cos(mθ)` for `m ≥ 0` and `sin(|m|θ)` for `m < 0`; makes every matrix real symmetric.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisSpec {
    max_m: u32,
    max_n: u32,
    length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BasisIndex {
    /// Flat 1-based index.
    pub j: usize,
    pub m: i32,
    pub n: u32,
}

impl BasisSpec {
    pub fn new(max_m: u32, max_n: u32, length: f64) -> Result<Self> {
        if max_n == 0 {
            return Err(Error::InvalidBasis("N must be at least 1".into()));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidBasis(format!("length must be positive, got {length}")));
        }
        Ok(Self { max_m, max_n, length })
    }

    pub fn for_geometry(max_m: u32, max_n: u32, geom: &TubeGeometry) -> Result<Self> {
        Self::new(max_m, max_n, geom.length())
    }

    pub fn max_m(&self) -> u32 {
        self.max_m
    }

    pub fn max_n(&self) -> u32 {
        self.max_n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of angular values, `2M + 1`.
    pub fn angular_count(&self) -> usize {
        2 * self.max_m as usize + 1
    }

    /// `(2M+1)·N`.
    pub fn size(&self) -> usize {
        self.angular_count() * self.max_n as usize
    }

    pub fn index(&self, j: usize) -> Result<BasisIndex> {
        let size = self.size();
        if j == 0 || j > size {
            return Err(Error::IndexOutOfRange { index: j, size });
        }
        let k = j - 1;
        let w = self.angular_count();
        Ok(BasisIndex { j, m: (k % w) as i32 - self.max_m as i32, n: (k / w) as u32 + 1 })
    }

    /// Inverse of [`BasisSpec::index`].
    pub fn flat(&self, m: i32, n: u32) -> Result<usize> {
        let big_m = self.max_m as i32;
        if m < -big_m || m > big_m || n == 0 || n > self.max_n {
            return Err(Error::NoSuchFunction { m, n });
        }
        Ok((n as usize - 1) * self.angular_count() + (m + big_m) as usize + 1)
    }

    /// All indices in flat order.
    pub fn indices(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        (1..=self.size()).map(move |j| self.index(j).expect("in range"))
    }

    /// Zero-based position of the θ-reflected partner `(−m, n)` for each zero-based position.
    pub fn reflection_permutation(&self) -> Vec<usize> {
        self.indices().map(|idx| self.flat(-idx.m, idx.n).expect("reflected index exists") - 1).collect()
    }

    /// Longitudinal wave number `nπ/L`.
    pub fn wavenumber(&self, n: u32) -> f64 {
        n as f64 * PI / self.length
    }
}

/// `ξ_{mn}(θ,s)`.
pub fn eval_xi(spec: &BasisSpec, idx: BasisIndex, p: SurfacePoint) -> Complex64 {
    let k = spec.wavenumber(idx.n);
    Complex64::from_polar(1.0, idx.m as f64 * p.theta) * (k * p.s).sin()
}

/// Real-basis counterpart of [`eval_xi`]: `cos(mθ)` or `sin(|m|θ)` times `sin(nπs/L)`.
pub fn eval_real(spec: &BasisSpec, idx: BasisIndex, p: SurfacePoint) -> f64 {
    let k = spec.wavenumber(idx.n);
    let ang = if idx.m >= 0 { (idx.m as f64 * p.theta).cos() } else { (-idx.m as f64 * p.theta).sin() };
    ang * (k * p.s).sin()
}

/// Surface Hamiltonian applied to `ξ_{mn}` and evaluated at `p`, in meV.
///
/// `H = -(ħ²/2m*) Δ_t + V_D` with
/// `Δ_t = a⁻²(∂²_θ + ∂_θ lnλ ∂_θ) + λ⁻²(∂²_s - ∂_s lnλ ∂_s)`; all derivatives
/// of `ξ` and `λ` are taken analytically.
pub fn eval_h_xi(geom: &TubeGeometry, spec: &BasisSpec, idx: BasisIndex, p: SurfacePoint) -> Complex64 {
    let a = geom.radius();
    let c = geom.hbar2_over_2m();
    let m = idx.m as f64;
    let k = spec.wavenumber(idx.n);
    let lam = geom.lambda(p);
    let (dl_theta, dl_s) = geom.log_lambda_gradient(p);
    let phase = Complex64::from_polar(1.0, m * p.theta);
    let (sin_ks, cos_ks) = (k * p.s).sin_cos();

    let angular = Complex64::new(-m * m, m * dl_theta) / (a * a);
    let longitudinal = (-k * k * sin_ks - dl_s * k * cos_ks) / (lam * lam);
    let laplacian = phase * (angular * sin_ks + longitudinal);
    -c * laplacian + geom.distortion_potential(p) * phase * sin_ks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> BasisSpec {
        BasisSpec::new(2, 4, 100.0).unwrap()
    }

    #[test]
    fn flat_ordering() {
        let b = spec();
        assert_eq!(b.size(), 20);
        let i = b.index(1).unwrap();
        assert_eq!((i.m, i.n), (-2, 1));
        let i = b.index(6).unwrap();
        assert_eq!((i.m, i.n), (-2, 2));
        let i = b.index(20).unwrap();
        assert_eq!((i.m, i.n), (2, 4));
        for j in 1..=20 {
            let i = b.index(j).unwrap();
            assert_eq!(b.flat(i.m, i.n).unwrap(), j);
        }
    }

    #[test]
    fn out_of_range() {
        let b = spec();
        assert_eq!(b.index(0), Err(Error::IndexOutOfRange { index: 0, size: 20 }));
        assert!(b.index(21).is_err());
        assert!(b.flat(3, 1).is_err());
        assert!(b.flat(0, 5).is_err());
        assert!(BasisSpec::new(2, 0, 100.0).is_err());
    }

    #[test]
    fn reflection_is_an_involution() {
        let b = spec();
        let r = b.reflection_permutation();
        for (i, &p) in r.iter().enumerate() {
            assert_eq!(r[p], i);
            assert_eq!(b.index(i + 1).unwrap().m, -b.index(p + 1).unwrap().m);
        }
    }

    #[test]
    fn xi_values() {
        let b = spec();
        let i01 = b.index(b.flat(0, 1).unwrap()).unwrap();
        let v = eval_xi(&b, i01, SurfacePoint::new(0.7, 50.0));
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let i11 = b.index(b.flat(1, 1).unwrap()).unwrap();
        let v = eval_xi(&b, i11, SurfacePoint::new(PI / 2.0, 50.0));
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        for idx in b.indices() {
            for &s in &[0.0, 100.0] {
                assert!(eval_xi(&b, idx, SurfacePoint::new(1.1, s)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn straight_tube_eigenrelation() {
        let g = TubeGeometry::straight(0.85, 100.0).unwrap();
        let b = spec();
        let c = g.hbar2_over_2m();
        for idx in b.indices() {
            let k = b.wavenumber(idx.n);
            let eps = c * ((idx.m * idx.m) as f64 / 0.7225 + k * k) - 0.25 * c / 0.7225;
            for t in 0..7 {
                let p = SurfacePoint::new(0.9 * t as f64, 3.0 + 13.0 * t as f64);
                let hx = eval_h_xi(&g, &b, idx, p);
                let x = eval_xi(&b, idx, p);
                assert!((hx - eps * x).norm() <= 1e-12 * eps.abs() * x.norm().max(1e-300) + 1e-13);
            }
        }
    }

    #[test]
    fn reflection_symmetry_of_h_xi() {
        let g = TubeGeometry::new(0.85, 100.0, 1.0, 52.5).unwrap();
        let b = spec();
        for idx in b.indices() {
            let partner = b.index(b.flat(-idx.m, idx.n).unwrap()).unwrap();
            for t in 0..9 {
                let p = SurfacePoint::new(0.31 + 0.7 * t as f64, 45.0 + 1.7 * t as f64);
                let q = SurfacePoint::new(-p.theta, p.s);
                let lhs = eval_h_xi(&g, &b, idx, p);
                let rhs = eval_h_xi(&g, &b, partner, q);
                assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
                // Real-valued coefficients in the operator: ξ_{-m}(-θ) = ξ_m(θ)
                // and H ξ_{-m}(θ) = conj(H ξ_m(θ)).
                let conj = eval_h_xi(&g, &b, partner, p).conj();
                assert!((lhs - conj).norm() <= 1e-12 * (1.0 + lhs.norm()));
            }
        }
    }

    #[test]
    fn h_xi_is_periodic_in_theta() {
        let g = TubeGeometry::new(0.85, 100.0, 1.15, 73.79).unwrap();
        let b = spec();
        for idx in b.indices() {
            let p = SurfacePoint::new(0.4, 73.0);
            let q = SurfacePoint::new(0.4 + 2.0 * PI, 73.0);
            let (x, y) = (eval_h_xi(&g, &b, idx, p), eval_h_xi(&g, &b, idx, q));
            assert!((x - y).norm() <= 1e-9 * (1.0 + x.norm()));
        }
    }
}
