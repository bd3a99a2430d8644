//! Built-in configurations for the published tables and density figures.

use tubearc::assembly::Arrangement;
use tubearc::geometry::TubeParams;

use crate::config::{BasisConfig, CurvatureCase, DensityConfig, LatticeConfig, OutputConfig, RunConfig};

pub const PRESETS: [&str; 11] =
    ["straight", "table1", "table2", "table3", "table4", "table5", "fig2", "fig3", "fig4", "fig5", "fig6"];

/// The eight `(κ₀, s₀)` bends of the lattice-free tables; the first is straight.
pub const ARC_CASES: [(f64, Option<f64>); 8] = [
    (0.0, None),
    (0.75, Some(51.87)),
    (0.75, Some(55.60)),
    (0.95, Some(52.37)),
    (0.95, Some(57.08)),
    (1.00, Some(52.50)),
    (1.00, Some(57.45)),
    (1.15, Some(73.79)),
];

pub const LATTICE_CASES: [(f64, Option<f64>); 3] = [(0.0, None), (0.95, Some(52.37)), (1.00, Some(52.50))];

fn tube() -> TubeParams {
    TubeParams {
        radius: 0.85,
        length: 100.0,
        kappa0: 0.0,
        s0: None,
        mass_ratio: 1.0,
        hbar2_over_2me: tubearc::geometry::HBAR2_OVER_2ME_EV_NM2,
    }
}

fn cases(list: &[(f64, Option<f64>)]) -> Vec<CurvatureCase> {
    list.iter().map(|&(kappa0, s0)| CurvatureCase { kappa0, s0 }).collect()
}

fn armchair() -> LatticeConfig {
    LatticeConfig {
        strength: 400.0,
        arrangement: Arrangement::Armchair,
        per_ring: Some(6),
        rings: Some(195),
        sites: None,
    }
}

fn arc_sweep(name: &str, state: usize) -> RunConfig {
    RunConfig {
        name: name.into(),
        geometry: tube(),
        cases: cases(&ARC_CASES),
        basis: BasisConfig::default(),
        quadrature: Default::default(),
        lattice: None,
        outputs: OutputConfig {
            table_states: vec![state],
            density: DensityConfig { state, ..DensityConfig::default() },
            ..OutputConfig::default()
        },
    }
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let cfg = match name {
        "straight" => RunConfig {
            name: name.into(),
            geometry: tube(),
            cases: Vec::new(),
            basis: BasisConfig::default(),
            quadrature: Default::default(),
            lattice: None,
            outputs: OutputConfig { table_states: vec![0, 1, 2, 3], ..OutputConfig::default() },
        },
        "table1" | "fig2" => arc_sweep(name, 0),
        "table2" | "fig3" => arc_sweep(name, 1),
        "table3" | "fig4" => arc_sweep(name, 2),
        "table4" | "fig5" => arc_sweep(name, 3),
        "table5" => RunConfig {
            name: name.into(),
            geometry: tube(),
            cases: cases(&LATTICE_CASES),
            basis: BasisConfig { max_m: 6, max_n: 4, ..BasisConfig::default() },
            quadrature: Default::default(),
            lattice: Some(armchair()),
            outputs: OutputConfig { table_states: Vec::new(), ..OutputConfig::default() },
        },
        "fig6" => RunConfig {
            name: name.into(),
            geometry: TubeParams { kappa0: 1.00, s0: Some(57.45), ..tube() },
            cases: Vec::new(),
            basis: BasisConfig { max_m: 6, max_n: 4, ..BasisConfig::default() },
            quadrature: Default::default(),
            lattice: Some(armchair()),
            outputs: OutputConfig {
                table_states: Vec::new(),
                density: DensityConfig { theta: None, ..DensityConfig::default() },
                ..OutputConfig::default()
            },
        },
        _ => return None,
    };
    Some(cfg)
}
