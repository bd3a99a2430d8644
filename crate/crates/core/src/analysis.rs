//! Post-processing of eigenstates: parity, densities, angular peak counts,
//! and coefficient tables in trigonometric form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::basis::{eval_xi, BasisSpec};
use crate::geometry::{SurfacePoint, TubeGeometry};
use crate::linalg::{dot, CMatrix};
use crate::quadrature::{surface_integral, QuadratureGrid};

/// Scores beyond ±this count as definite parity.
pub const PARITY_THRESHOLD: f64 = 0.999;
/// Minimum peak prominence as a fraction of the ring's maximum density.
pub const PEAK_PROMINENCE: f64 = 0.05;
pub const DEFAULT_PEAK_SAMPLES: usize = 512;
/// Table coefficients below this magnitude are omitted.
pub const DEFAULT_TABLE_THRESHOLD: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "+1")]
    Even,
    #[serde(rename = "-1")]
    Odd,
    #[serde(rename = "mixed")]
    Mixed,
}

impl Parity {
    pub fn sign(self) -> Option<i8> {
        match self {
            Parity::Even => Some(1),
            Parity::Odd => Some(-1),
            Parity::Mixed => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub parity: Parity,
    /// `⟨Ψ|RΨ⟩ / ⟨Ψ|Ψ⟩` in `[-1, 1]`.
    pub score: f64,
}

/// Expectation of the reflection `c_{m,n} ↔ c_{-m,n}` under the ξ overlap.
pub fn parity_classify(state: &[Complex64], spec: &BasisSpec, overlap: &CMatrix) -> ParityReport {
    let perm = spec.reflection_permutation();
    let mut reflected = vec![Complex64::default(); state.len()];
    for (i, &p) in perm.iter().enumerate() {
        reflected[p] = state[i];
    }
    let norm = dot(state, &overlap.mul_vec(state)).re;
    let score = (dot(state, &overlap.mul_vec(&reflected)).re / norm).clamp(-1.0, 1.0);
    let parity = if score > PARITY_THRESHOLD {
        Parity::Even
    } else if score < -PARITY_THRESHOLD {
        Parity::Odd
    } else {
        Parity::Mixed
    };
    ParityReport { parity, score }
}

/// `Ψ(θ,s) = Σ c_j ξ_j(θ,s)`.
pub fn wavefunction(state: &[Complex64], spec: &BasisSpec, p: SurfacePoint) -> Complex64 {
    spec.indices().zip(state).map(|(b, c)| c * eval_xi(spec, b, p)).sum()
}

/// `|Ψ(θ,s)|²` in 1/nm².
pub fn density(state: &[Complex64], spec: &BasisSpec, p: SurfacePoint) -> f64 {
    wavefunction(state, spec, p).norm_sqr()
}

/// `∫ aλ |Ψ|² dθ ds`.
pub fn surface_norm(state: &[Complex64], spec: &BasisSpec, geom: &TubeGeometry, grid: &QuadratureGrid) -> f64 {
    surface_integral(geom, grid, |p| Complex64::new(density(state, spec, p), 0.0)).re
}

/// `(s, ρ)` at `samples` evenly spaced arclengths covering `[0, L]`.
pub fn density_profile_at(state: &[Complex64], spec: &BasisSpec, theta: f64, samples: usize) -> Vec<(f64, f64)> {
    let l = spec.length();
    let last = samples.max(2) - 1;
    (0..=last)
        .map(|i| {
            let s = l * i as f64 / last as f64;
            (s, density(state, spec, SurfacePoint::new(theta, s)))
        })
        .collect()
}

/// `(θ, s, ρ)` on an `n_theta × n_s` grid, θ over `[0, 2π)` and s over `[0, L]`, s-major.
pub fn density_surface(state: &[Complex64], spec: &BasisSpec, n_theta: usize, n_s: usize) -> Vec<(f64, f64, f64)> {
    let l = spec.length();
    let last = n_s.max(2) - 1;
    let mut out = Vec::with_capacity(n_theta * (last + 1));
    for i in 0..=last {
        let s = l * i as f64 / last as f64;
        for t in 0..n_theta {
            let theta = TAU * t as f64 / n_theta as f64;
            out.push((theta, s, density(state, spec, SurfacePoint::new(theta, s))));
        }
    }
    out
}

/// Density on the ring at arclength `s`, `samples` equal steps over `[0, 2π)`.
pub fn ring_density(state: &[Complex64], spec: &BasisSpec, s: f64, samples: usize) -> Vec<f64> {
    (0..samples).map(|t| density(state, spec, SurfacePoint::new(TAU * t as f64 / samples as f64, s))).collect()
}

/// Strict local maxima of a periodic sequence whose topographic prominence
/// is at least [`PEAK_PROMINENCE`] times the sequence maximum.
pub fn count_circular_peaks(values: &[f64]) -> usize {
    let n = values.len();
    if n < 3 {
        return 0;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = PEAK_PROMINENCE * max;
    let at = |i: isize| values[i.rem_euclid(n as isize) as usize];
    let mut count = 0;
    for i in 0..n as isize {
        let v = at(i);
        if !(v > at(i - 1) && v > at(i + 1)) {
            continue;
        }
        // Lowest point passed on each side before reaching higher ground.
        let walk = |step: isize| {
            let mut low = v;
            for d in 1..n as isize {
                let w = at(i + step * d);
                if w > v {
                    return Some(low);
                }
                low = low.min(w);
            }
            None
        };
        let prominence = match (walk(-1), walk(1)) {
            (Some(l), Some(r)) => v - l.max(r),
            (Some(x), None) | (None, Some(x)) => v - x,
            (None, None) => v - min,
        };
        if prominence >= cut {
            count += 1;
        }
    }
    count
}

/// Number of density peaks around the ring at arclength `s`.
pub fn angular_peak_count(state: &[Complex64], spec: &BasisSpec, s: f64, samples: usize) -> usize {
    count_circular_peaks(&ring_density(state, spec, s, samples.max(256)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

/// One term `value · cos(mθ) sin(nπs/L)` (or `sin(mθ)`); `m = 0` is always `Cos`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableTerm {
    pub m: u32,
    pub n: u32,
    pub trig: Trig,
    pub value: f64,
}

/// Rewrites ξ-coefficients as real cos/sin terms with the largest term
/// positive, keeping `|value| ≥ threshold`, sorted by `|value|` descending.
pub fn trig_terms(state: &[Complex64], spec: &BasisSpec, threshold: f64) -> Vec<TableTerm> {
    let coef = |m: i32, n: u32| state[spec.flat(m, n).expect("in range") - 1];
    let mut raw: Vec<(u32, u32, Trig, Complex64)> = Vec::new();
    for n in 1..=spec.max_n() {
        raw.push((0, n, Trig::Cos, coef(0, n)));
        for m in 1..=spec.max_m() as i32 {
            let (p, q) = (coef(m, n), coef(-m, n));
            raw.push((m as u32, n, Trig::Cos, p + q));
            raw.push((m as u32, n, Trig::Sin, Complex64::i() * (p - q)));
        }
    }
    // A real-valued state times a global phase: rotate the largest term onto
    // the positive real axis.
    let lead = raw.iter().map(|r| r.3).max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { Complex64::new(1.0, 0.0) };
    let mut terms: Vec<TableTerm> =
        raw.into_iter().map(|(m, n, trig, v)| TableTerm { m, n, trig, value: (v * phase).re }).collect();
    terms.retain(|t| t.value.abs() >= threshold);
    terms.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    terms
}

/// Summary of one eigenstate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateReport {
    pub energy: f64,
    pub parity: ParityReport,
    pub terms: Vec<TableTerm>,
    /// `(s, ρ)` at θ = π.
    pub profile: Vec<(f64, f64)>,
}

pub fn state_report(
    energy: f64,
    state: &[Complex64],
    spec: &BasisSpec,
    overlap: &CMatrix,
    threshold: f64,
    profile_samples: usize,
) -> StateReport {
    StateReport {
        energy,
        parity: parity_classify(state, spec, overlap),
        terms: trig_terms(state, spec, threshold),
        profile: if profile_samples > 0 { density_profile_at(state, spec, PI, profile_samples) } else { Vec::new() },
    }
}

/// One line of a paper-style state table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub kappa0: f64,
    pub s0: Option<f64>,
    pub length: f64,
    pub energy: f64,
    pub terms: Vec<TableTerm>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `.0612`, `-.0253`.
pub fn format_coefficient(v: f64) -> String {
    let s = format!("{:.4}", v.abs());
    let s = s.strip_prefix('0').unwrap_or(&s);
    if v < 0.0 && !s.trim_matches(['0', '.']).is_empty() {
        format!("-{s}")
    } else {
        s.to_string()
    }
}

/// `sin(πs/100)`, `sin(3πs/100)`, `sin(πs/25)`.
pub fn format_longitudinal(n: u32, length: f64) -> String {
    let (num, den) = if length.fract() == 0.0 && length > 0.0 && length < 1e15 {
        let g = gcd(n as u64, length as u64);
        (n as u64 / g, format!("{}", length as u64 / g))
    } else {
        (n as u64, format!("{length}"))
    };
    if num == 1 {
        format!("sin(πs/{den})")
    } else {
        format!("sin({num}πs/{den})")
    }
}

fn format_angular(t: &TableTerm) -> String {
    let name = match t.trig {
        Trig::Cos => "cos",
        Trig::Sin => "sin",
    };
    match t.m {
        0 => String::new(),
        1 => format!("{name}θ "),
        m => format!("{name}{m}θ "),
    }
}

/// Dominant-term label, e.g. `Ψ01`.
pub fn state_label(terms: &[TableTerm]) -> String {
    terms.first().map(|t| format!("Ψ{}{}", t.m, t.n)).unwrap_or_else(|| "Ψ".into())
}

/// Renders rows as `κ₀  s₀  ε  Ψmn = terms`, terms in order of n, then
/// descending |m|, cos before sin.
pub fn format_state_table(rows: &[TableRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<6} {:<7} {:<10} state", "kappa0", "s0", "energy");
    for row in rows {
        let mut terms = row.terms.clone();
        terms.sort_by(|a, b| a.n.cmp(&b.n).then(b.m.cmp(&a.m)).then((a.trig as u8).cmp(&(b.trig as u8))));
        let mut body = String::new();
        for (i, t) in terms.iter().enumerate() {
            let c = format_coefficient(t.value);
            if i > 0 {
                body.push(' ');
                if !c.starts_with('-') {
                    body.push('+');
                }
            }
            let _ = write!(body, "{c} {}{}", format_angular(t), format_longitudinal(t.n, row.length));
        }
        let s0 = row.s0.map(|s| format!("{s:.2}")).unwrap_or_else(|| "-----".into());
        let _ =
            writeln!(out, "{:<6.2} {:<7} {:<10.4} {} = {}", row.kappa0, s0, row.energy, state_label(&row.terms), body);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TubeGeometry;

    fn spec() -> BasisSpec {
        BasisSpec::new(2, 4, 100.0).unwrap()
    }

    fn unit(spec: &BasisSpec, entries: &[(i32, u32, Complex64)]) -> Vec<Complex64> {
        let mut v = vec![Complex64::default(); spec.size()];
        for &(m, n, c) in entries {
            v[spec.flat(m, n).unwrap() - 1] = c;
        }
        v
    }

    #[test]
    fn parity_of_simple_states() {
        let b = spec();
        let s = CMatrix::identity(b.size());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let odd = unit(&b, &[(1, 1, Complex64::new(h, 0.0)), (-1, 1, Complex64::new(-h, 0.0))]);
        let r = parity_classify(&odd, &b, &s);
        assert_eq!(r.parity, Parity::Odd);
        assert!((r.score + 1.0).abs() < 1e-15);
        let even = unit(&b, &[(0, 1, Complex64::new(1.0, 0.0))]);
        assert_eq!(parity_classify(&even, &b, &s).parity, Parity::Even);
        let mixed = unit(&b, &[(1, 1, Complex64::new(1.0, 0.0))]);
        let r = parity_classify(&mixed, &b, &s);
        assert_eq!(r.parity, Parity::Mixed);
        assert!(r.score.abs() < 1e-15);
    }

    #[test]
    fn straight_ground_density() {
        let b = spec();
        let pal = PI * 0.85 * 100.0;
        let c = 1.0 / pal.sqrt();
        let st = unit(&b, &[(0, 1, Complex64::new(c, 0.0))]);
        for &(s, rho) in &density_profile_at(&st, &b, PI, 17) {
            let exact = (PI * s / 100.0).sin().powi(2) / pal;
            assert!((rho - exact).abs() < 1e-15);
        }
        let geom = TubeGeometry::straight(0.85, 100.0).unwrap();
        let grid = QuadratureGrid::build(64, 16, 16, 100.0).unwrap();
        assert!((surface_norm(&st, &b, &geom, &grid) - 1.0).abs() < 1e-12);
        assert_eq!(angular_peak_count(&st, &b, 50.0, 512), 0);
    }

    #[test]
    fn circular_peaks() {
        let n = 512;
        let ring = |k: f64| (0..n).map(|i| 1.0 + (k * TAU * i as f64 / n as f64).cos()).collect::<Vec<_>>();
        assert_eq!(count_circular_peaks(&ring(6.0)), 6);
        assert_eq!(count_circular_peaks(&ring(1.0)), 1);
        assert_eq!(count_circular_peaks(&vec![2.0; 64]), 0);
        // A ripple far below 5% of the maximum is not a peak.
        let rippled: Vec<f64> = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                1.0 + t.cos() + 0.001 * (40.0 * t).cos()
            })
            .collect();
        assert_eq!(count_circular_peaks(&rippled), 1);
    }

    #[test]
    fn trig_terms_and_formatting() {
        let b = spec();
        let st = unit(
            &b,
            &[
                (0, 1, Complex64::new(-0.0555, 0.0)),
                (1, 1, Complex64::new(0.0011, 0.0)),
                (-1, 1, Complex64::new(0.0011, 0.0)),
                (0, 3, Complex64::new(0.0253, 0.0)),
            ],
        );
        let t = trig_terms(&st, &b, 0.001);
        assert_eq!(t.len(), 3);
        assert_eq!((t[0].m, t[0].n), (0, 1));
        assert!((t[0].value - 0.0555).abs() < 1e-15);
        assert!((t[1].value + 0.0253).abs() < 1e-15);
        assert!((t[2].value + 0.0022).abs() < 1e-15);
        assert_eq!(t[2].trig, Trig::Cos);
        assert_eq!(trig_terms(&st, &b, 0.0).len(), b.size());

        assert_eq!(format_coefficient(0.0612), ".0612");
        assert_eq!(format_coefficient(-0.02534), "-.0253");
        assert_eq!(format_longitudinal(1, 100.0), "sin(πs/100)");
        assert_eq!(format_longitudinal(2, 100.0), "sin(πs/50)");
        assert_eq!(format_longitudinal(3, 100.0), "sin(3πs/100)");
        assert_eq!(format_longitudinal(4, 100.0), "sin(πs/25)");

        let row = TableRow { kappa0: 0.75, s0: Some(51.87), length: 100.0, energy: -13.40681, terms: t };
        let table = format_state_table(&[row]);
        let line = table.lines().nth(1).unwrap();
        assert!(line.contains("Ψ01 = -.0022 cosθ sin(πs/100) +.0555 sin(πs/100) -.0253 sin(3πs/100)"), "{line}");
        assert!(line.contains("-13.4068"));
    }

    #[test]
    fn sine_terms() {
        let b = spec();
        // sin θ = (e^{iθ} - e^{-iθ}) / 2i
        let st = unit(&b, &[(1, 2, Complex64::new(0.0, -0.05)), (-1, 2, Complex64::new(0.0, 0.05))]);
        let t = trig_terms(&st, &b, 0.001);
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].m, t[0].n, t[0].trig), (1, 2, Trig::Sin));
        assert!((t[0].value - 0.1).abs() < 1e-15);
    }
}
