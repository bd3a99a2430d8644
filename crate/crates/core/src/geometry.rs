//! Closed-form differential geometry of the tubular arc.
//!
//! The tube has radius `a` and its axis is the planar curve
//! `f(u) = -cosh(κ₀(u - u₀)) / κ₀`. Everything the Hamiltonian needs is
//! expressed in the arclength `s` of the axis, where the axis curvature is the
//! Lorentzian `κ(s) = -κ₀ / (1 + [κ₀(s - s₀)]²)`. The `u` coordinate only
//! appears when embedding surface points in 3-space.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// ħ²/(2mₑ) in eV·nm².
pub const HBAR2_OVER_2ME_EV_NM2: f64 = 0.0380998;

/// Plain parameter record for a tube; validated into a [`TubeGeometry`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeParams {
    /// Tube radius `a` (nm).
    pub radius: f64,
    /// Tube length along the axis arclength (nm).
    pub length: f64,
    /// Curvature parameter κ₀ (1/nm); zero for a straight tube.
    #[serde(default)]
    pub kappa0: f64,
    /// Arclength of the bend apex (nm). Ignored when `kappa0 == 0`.
    #[serde(default)]
    pub s0: Option<f64>,
    /// Effective mass in units of the electron mass.
    #[serde(default = "default_mass_ratio")]
    pub mass_ratio: f64,
    /// ħ²/(2mₑ) in eV·nm².
    #[serde(default = "default_hbar2")]
    pub hbar2_over_2me: f64,
}

fn default_mass_ratio() -> f64 {
    1.0
}

fn default_hbar2() -> f64 {
    HBAR2_OVER_2ME_EV_NM2
}

/// A point on the tube surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    /// Angle around the tube, radians.
    pub theta: f64,
    /// Arclength along the axis, nm.
    pub s: f64,
}

impl SurfacePoint {
    pub fn new(theta: f64, s: f64) -> Self {
        Self { theta, s }
    }

    /// Same point with `theta` wrapped into `[0, 2π)`.
    pub fn normalized(self) -> Self {
        let mut theta = self.theta.rem_euclid(TAU);
        if theta >= TAU {
            theta = 0.0;
        }
        Self { theta, s: self.s }
    }
}

/// Validated tube geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeGeometry {
    radius: f64,
    length: f64,
    kappa0: f64,
    s0: f64,
    mass_ratio: f64,
    hbar2_over_2me: f64,
}

impl TubeGeometry {
    /// Curved tube with the default mass and physical constant.
    pub fn new(radius: f64, length: f64, kappa0: f64, s0: f64) -> Result<Self> {
        Self::from_params(TubeParams {
            radius,
            length,
            kappa0,
            s0: Some(s0),
            mass_ratio: default_mass_ratio(),
            hbar2_over_2me: default_hbar2(),
        })
    }

    /// Straight cylinder of radius `radius` and length `length`.
    pub fn straight(radius: f64, length: f64) -> Result<Self> {
        Self::new(radius, length, 0.0, 0.5 * length)
    }

    pub fn from_params(p: TubeParams) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if !(p.radius.is_finite() && p.radius > 0.0) {
            return bad(format!("radius must be positive, got {}", p.radius));
        }
        if !(p.length.is_finite() && p.length > 0.0) {
            return bad(format!("length must be positive, got {}", p.length));
        }
        if !(p.kappa0.is_finite() && p.kappa0 >= 0.0) {
            return bad(format!("kappa0 must be non-negative, got {}", p.kappa0));
        }
        if p.radius * p.kappa0 >= 1.0 {
            return bad(format!("radius * kappa0 = {} must be < 1 for a non-degenerate surface", p.radius * p.kappa0));
        }
        if !(p.mass_ratio.is_finite() && p.mass_ratio > 0.0) {
            return bad(format!("mass ratio must be positive, got {}", p.mass_ratio));
        }
        if !(p.hbar2_over_2me.is_finite() && p.hbar2_over_2me > 0.0) {
            return bad(format!("hbar^2/2m_e must be positive, got {}", p.hbar2_over_2me));
        }
        let s0 = if p.kappa0 == 0.0 {
            p.s0.unwrap_or(0.5 * p.length)
        } else {
            match p.s0 {
                Some(s0) => s0,
                None => return bad("s0 is required when kappa0 > 0".into()),
            }
        };
        if p.kappa0 > 0.0 && !(0.0..=p.length).contains(&s0) {
            return bad(format!("s0 = {s0} must lie in [0, {}]", p.length));
        }
        Ok(Self {
            radius: p.radius,
            length: p.length,
            kappa0: p.kappa0,
            s0,
            mass_ratio: p.mass_ratio,
            hbar2_over_2me: p.hbar2_over_2me,
        })
    }

    pub fn params(&self) -> TubeParams {
        TubeParams {
            radius: self.radius,
            length: self.length,
            kappa0: self.kappa0,
            s0: Some(self.s0),
            mass_ratio: self.mass_ratio,
            hbar2_over_2me: self.hbar2_over_2me,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn mass_ratio(&self) -> f64 {
        self.mass_ratio
    }

    pub fn is_straight(&self) -> bool {
        self.kappa0 == 0.0
    }

    /// ħ²/(2m*) in meV·nm².
    pub fn hbar2_over_2m(&self) -> f64 {
        1.0e3 * self.hbar2_over_2me / self.mass_ratio
    }

    /// Turning point of the shape function on the `u` axis, fixed by `s(u=0) = 0`.
    pub fn u0(&self) -> f64 {
        if self.is_straight() {
            0.0
        } else {
            (self.kappa0 * self.s0).asinh() / self.kappa0
        }
    }

    /// `f(u) = -cosh(κ₀(u - u₀)) / κ₀`.
    pub fn shape_profile(&self, u: f64) -> Result<f64> {
        if self.is_straight() {
            return Err(Error::StraightTube);
        }
        Ok(-(self.kappa0 * (u - self.u0())).cosh() / self.kappa0)
    }

    pub fn arclength_of_u(&self, u: f64) -> Result<f64> {
        if self.is_straight() {
            return Err(Error::StraightTube);
        }
        Ok(self.s0 + (self.kappa0 * (u - self.u0())).sinh() / self.kappa0)
    }

    pub fn u_of_arclength(&self, s: f64) -> Result<f64> {
        if self.is_straight() {
            return Err(Error::StraightTube);
        }
        Ok(self.u0() + (self.kappa0 * (s - self.s0)).asinh() / self.kappa0)
    }

    /// Signed curvature of the axis; in `[-κ₀, 0]`.
    pub fn axis_curvature(&self, s: f64) -> f64 {
        if self.is_straight() {
            return 0.0;
        }
        let x = self.kappa0 * (s - self.s0);
        -self.kappa0 / (1.0 + x * x)
    }

    pub fn axis_curvature_derivative(&self, s: f64) -> f64 {
        if self.is_straight() {
            return 0.0;
        }
        let d = s - self.s0;
        let x = self.kappa0 * d;
        let q = 1.0 + x * x;
        2.0 * self.kappa0.powi(3) * d / (q * q)
    }

    /// Measure factor `λ = 1 - a κ(s) cos θ`.
    pub fn lambda(&self, p: SurfacePoint) -> f64 {
        1.0 - self.radius * self.axis_curvature(p.s) * p.theta.cos()
    }

    /// `(∂lnλ/∂θ, ∂lnλ/∂s)`.
    pub fn log_lambda_gradient(&self, p: SurfacePoint) -> (f64, f64) {
        let lam = self.lambda(p);
        let (sin, cos) = p.theta.sin_cos();
        let d_theta = self.radius * self.axis_curvature(p.s) * sin / lam;
        let d_s = -self.radius * self.axis_curvature_derivative(p.s) * cos / lam;
        (d_theta, d_s)
    }

    /// `(κ₁, κ₂)`: the hoop curvature `1/a` and the curvature along the axis direction.
    pub fn principal_curvatures(&self, p: SurfacePoint) -> (f64, f64) {
        let k = self.axis_curvature(p.s) * p.theta.cos();
        (1.0 / self.radius, -k / (1.0 - self.radius * k))
    }

    /// `(H, K)`: mean and Gauss curvature.
    pub fn mean_gauss_curvature(&self, p: SurfacePoint) -> (f64, f64) {
        let (k1, k2) = self.principal_curvatures(p);
        (0.5 * (k1 + k2), k1 * k2)
    }

    /// `V_D = -ħ²/(8 m* a²) λ⁻²` in meV.
    pub fn distortion_potential(&self, p: SurfacePoint) -> f64 {
        let lam = self.lambda(p);
        -0.25 * self.hbar2_over_2m() / (self.radius * self.radius * lam * lam)
    }

    /// `V_D = -ħ²/(2m*) (H² - K)` in meV, evaluated through the curvatures.
    pub fn distortion_potential_from_curvatures(&self, p: SurfacePoint) -> f64 {
        let (h, k) = self.mean_gauss_curvature(p);
        -self.hbar2_over_2m() * (h * h - k)
    }

    /// Axis point and unit tangent `(α, β)` / normal `(-β, α)` data at arclength `s`.
    fn axis_frame(&self, s: f64) -> ([f64; 3], f64, f64) {
        if self.is_straight() {
            return ([s, 0.0, 0.0], 1.0, 0.0);
        }
        let u = self.u0() + (self.kappa0 * (s - self.s0)).asinh() / self.kappa0;
        let arg = self.kappa0 * (u - self.u0());
        let f = -arg.cosh() / self.kappa0;
        let fu = -arg.sinh();
        let alpha = 1.0 / (1.0 + fu * fu).sqrt();
        let beta = fu * alpha;
        ([u, f, 0.0], alpha, beta)
    }

    /// Point on the tube axis at arclength `s`.
    pub fn axis_point(&self, s: f64) -> [f64; 3] {
        self.axis_frame(s).0
    }

    /// Embeds a surface point in 3-space (nm).
    pub fn embed(&self, p: SurfacePoint) -> [f64; 3] {
        let (c, alpha, beta) = self.axis_frame(p.s);
        let (sin, cos) = p.theta.sin_cos();
        let a = self.radius;
        [c[0] - a * beta * cos, c[1] + a * alpha * cos, a * sin]
    }

    /// Outward unit normal of the surface.
    pub fn surface_normal(&self, p: SurfacePoint) -> [f64; 3] {
        let (_, alpha, beta) = self.axis_frame(p.s);
        let (sin, cos) = p.theta.sin_cos();
        [-beta * cos, alpha * cos, sin]
    }
}
