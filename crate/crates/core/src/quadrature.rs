//! Tensor-product quadrature over the tube surface.
//!
//! The angular direction uses the periodic trapezoidal rule (uniform nodes,
//! equal weights), which is spectrally accurate for smooth periodic
//! integrands. The arclength direction uses composite Gauss–Legendre panels.
//! For a bent tube the integrands have complex singularities a distance
//! `√(1 - aκ₀)/κ₀` from the real axis at `s₀`, so the default panel layout
//! is graded geometrically away from the bend apex.
//!
//! All sums run s-major, then θ, in a fixed order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{SurfacePoint, TubeGeometry};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Geometric panel grading around the bend apex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grading {
    /// Width of the two panels touching `s₀` (nm).
    pub min_width: f64,
    /// Ratio between consecutive panel widths moving away from `s₀`.
    pub growth: f64,
}

impl Default for Grading {
    fn default() -> Self {
        Self { min_width: 0.05, growth: 1.5 }
    }
}

/// Resolution settings for [`QuadratureGrid::for_geometry`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    /// Uniform panel count; with grading, `L / panels` caps the panel width.
    #[serde(default = "default_panels")]
    pub panels: usize,
    #[serde(default = "default_points")]
    pub points_per_panel: usize,
    /// `None` forces uniform panels even for a bent tube.
    #[serde(default = "default_grading")]
    pub grading: Option<Grading>,
}

fn default_n_theta() -> usize {
    256
}
fn default_panels() -> usize {
    16
}
fn default_points() -> usize {
    16
}
fn default_grading() -> Option<Grading> {
    Some(Grading::default())
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_theta: default_n_theta(),
            panels: default_panels(),
            points_per_panel: default_points(),
            grading: default_grading(),
        }
    }
}

impl QuadratureSpec {
    /// Doubles the angular count and the points per panel.
    pub fn refined(&self) -> Self {
        Self { n_theta: 2 * self.n_theta, points_per_panel: 2 * self.points_per_panel, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    theta_nodes: Vec<f64>,
    theta_weight: f64,
    s_nodes: Vec<f64>,
    s_weights: Vec<f64>,
    breakpoints: Vec<f64>,
    points_per_panel: usize,
}

fn check_sizes(n_theta: usize, points_per_panel: usize) -> Result<()> {
    if n_theta < 8 || !n_theta.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!("N_theta must be even and >= 8, got {n_theta}")));
    }
    if points_per_panel < 2 {
        return Err(Error::InvalidGrid(format!("points per panel must be >= 2, got {points_per_panel}")));
    }
    Ok(())
}

impl QuadratureGrid {
    /// Uniform panels on `[0, length]`.
    pub fn build(n_theta: usize, panels: usize, points_per_panel: usize, length: f64) -> Result<Self> {
        check_sizes(n_theta, points_per_panel)?;
        if panels == 0 {
            return Err(Error::InvalidGrid("need at least one panel".into()));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        let h = length / panels as f64;
        let mut breakpoints: Vec<f64> = (0..panels).map(|i| i as f64 * h).collect();
        breakpoints.push(length);
        Ok(Self::from_breakpoints(n_theta, breakpoints, points_per_panel))
    }

    /// Panels graded geometrically away from `center`, no wider than `max_width`.
    pub fn build_graded(
        n_theta: usize,
        points_per_panel: usize,
        length: f64,
        center: f64,
        grading: Grading,
        max_width: f64,
    ) -> Result<Self> {
        check_sizes(n_theta, points_per_panel)?;
        if !(grading.min_width > 0.0 && grading.growth >= 1.0 && max_width >= grading.min_width) {
            return Err(Error::InvalidGrid(format!(
                "grading needs min_width > 0, growth >= 1 and max_width >= min_width, got {grading:?} / {max_width}"
            )));
        }
        if !(0.0..=length).contains(&center) {
            return Err(Error::InvalidGrid(format!("grading center {center} outside [0, {length}]")));
        }
        let side = |extent: f64| -> Vec<f64> {
            // Offsets from the center, ending exactly at `extent`.
            let mut out = Vec::new();
            let mut at = 0.0;
            let mut w = grading.min_width;
            while at < extent {
                let next = at + w;
                let wider = (w * grading.growth).min(max_width);
                if next >= extent || extent - next < 0.5 * wider {
                    out.push(extent);
                    break;
                }
                out.push(next);
                at = next;
                w = wider;
            }
            out
        };
        let mut breakpoints: Vec<f64> = side(center).iter().rev().map(|d| center - d).collect();
        breakpoints.push(center);
        breakpoints.extend(side(length - center).iter().map(|d| center + d));
        breakpoints[0] = 0.0;
        *breakpoints.last_mut().expect("nonempty") = length;
        breakpoints.dedup();
        Ok(Self::from_breakpoints(n_theta, breakpoints, points_per_panel))
    }

    /// Grid suited to `geom`: graded at `s₀` for a bent tube when the spec asks for it.
    pub fn for_geometry(geom: &TubeGeometry, spec: &QuadratureSpec) -> Result<Self> {
        let length = geom.length();
        match spec.grading {
            Some(grading) if !geom.is_straight() => {
                if spec.panels == 0 {
                    return Err(Error::InvalidGrid("need at least one panel".into()));
                }
                // Keep the apex panels well inside the singularity distance.
                let kappa0 = geom.kappa0();
                let pole = (1.0 - geom.radius() * kappa0).sqrt() / kappa0;
                let grading = Grading { min_width: grading.min_width.min(pole), ..grading };
                let max_width = (length / spec.panels as f64).max(grading.min_width);
                Self::build_graded(spec.n_theta, spec.points_per_panel, length, geom.s0(), grading, max_width)
            }
            _ => Self::build(spec.n_theta, spec.panels, spec.points_per_panel, length),
        }
    }

    fn from_breakpoints(n_theta: usize, breakpoints: Vec<f64>, points_per_panel: usize) -> Self {
        let theta_weight = TAU / n_theta as f64;
        let theta_nodes = (0..n_theta).map(|i| i as f64 * theta_weight).collect();
        let (x, w) = gauss_legendre(points_per_panel);
        let mut s_nodes = Vec::with_capacity((breakpoints.len() - 1) * points_per_panel);
        let mut s_weights = Vec::with_capacity(s_nodes.capacity());
        for pair in breakpoints.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for (xi, wi) in x.iter().zip(&w) {
                s_nodes.push(mid + half * xi);
                s_weights.push(half * wi);
            }
        }
        Self { theta_nodes, theta_weight, s_nodes, s_weights, breakpoints, points_per_panel }
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }

    pub fn theta_weight(&self) -> f64 {
        self.theta_weight
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }

    pub fn s_weights(&self) -> &[f64] {
        &self.s_weights
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn n_theta(&self) -> usize {
        self.theta_nodes.len()
    }

    pub fn n_s(&self) -> usize {
        self.s_nodes.len()
    }

    pub fn panel_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn points_per_panel(&self) -> usize {
        self.points_per_panel
    }

    /// `N_θ ≥ 4M + 8`: the angular rule must resolve products of basis harmonics.
    pub fn check_angular_resolution(&self, max_m: u32) -> Result<()> {
        let need = 4 * max_m as usize + 8;
        if self.n_theta() < need {
            return Err(Error::InvalidGrid(format!("N_theta = {} is below 4M+8 = {need}", self.n_theta())));
        }
        Ok(())
    }

    /// `∫ f(s) ds` over `[0, L]`.
    pub fn integrate_s(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.s_nodes.iter().zip(&self.s_weights).map(|(&s, &w)| w * f(s)).sum()
    }

    /// `∫ f(θ) dθ` over one period.
    pub fn integrate_theta(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let sum: Complex64 = self.theta_nodes.iter().map(|&t| f(t)).sum();
        sum * self.theta_weight
    }
}

/// `⟨f, g⟩ = ∫ a λ(θ,s) conj(f) g dθ ds` (nm²-weighted).
pub fn surface_inner_product(
    geom: &TubeGeometry,
    grid: &QuadratureGrid,
    f: impl Fn(SurfacePoint) -> Complex64,
    g: impl Fn(SurfacePoint) -> Complex64,
) -> Complex64 {
    surface_integral(geom, grid, |p| f(p).conj() * g(p))
}

/// `∫ a λ(θ,s) h(θ,s) dθ ds`.
pub fn surface_integral(
    geom: &TubeGeometry,
    grid: &QuadratureGrid,
    h: impl Fn(SurfacePoint) -> Complex64,
) -> Complex64 {
    let a = geom.radius();
    let mut total = Complex64::new(0.0, 0.0);
    for (&s, &ws) in grid.s_nodes.iter().zip(&grid.s_weights) {
        let mut ring = Complex64::new(0.0, 0.0);
        for &theta in &grid.theta_nodes {
            let p = SurfacePoint::new(theta, s);
            ring += geom.lambda(p) * h(p);
        }
        total += ring * (ws * grid.theta_weight * a);
    }
    total
}
