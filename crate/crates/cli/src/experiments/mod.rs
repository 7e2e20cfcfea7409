//! The registered experiments. Each module exposes `defaults()` (controls as
//! JSON) and `run`.

mod bands;
mod common;
mod doublon_model;
mod momentum;
mod obc;
mod phase_diagram;
mod resonant;
mod scattering;
mod semiclassical;
mod transition_scan;
mod wavepackets;

use tiltpump::{Boundary, ModelParams};

use crate::Experiment;

fn open_chain() -> ModelParams {
    ModelParams::bound_pump().with_sites(74).with_boundary(Boundary::Open)
}

fn resonant_chain() -> ModelParams {
    ModelParams::resonant().with_sites(74).with_boundary(Boundary::Open)
}

pub static REGISTRY: &[Experiment] = &[
    Experiment {
        id: "bands",
        summary: "Bloch bands on the (k, t) torus, band clusters, k = 0 cut against the doublon model, lattice Chern numbers",
        runtime: "~20 s",
        checks: &[
            "gap separating the five clusters stays open",
            "Chern numbers (-3, 3, -3, 0, 3), raw values within 0.02",
            "Chern numbers sum to zero",
            "doublon-model bands within 0.1 of bands (i), (ii) for U >= 30",
        ],
        params: ModelParams::bound_pump,
        controls: bands::defaults,
        run: bands::run,
    },
    Experiment {
        id: "semiclassical",
        summary: "Semiclassical band-(ii) displacement over three drive periods against k0, with and without tilt",
        runtime: "~3 min",
        checks: &[
            "U = 30, tilted: every k0 moves 3 cells within 0.05",
            "U = 30, untilted: displacement depends on k0",
            "spread shrinks from U = 10 to U = 30",
        ],
        params: ModelParams::bound_pump,
        controls: semiclassical::defaults,
        run: semiclassical::run,
    },
    Experiment {
        id: "wavepackets",
        summary: "Fock and Gaussian initial states on the open chain, U in {10, 30}, with and without tilt",
        runtime: "~7 min",
        checks: &[
            "Fock U = 10: Delta X / d = 2.644 (untilted) and 2.607 (tilted)",
            "Fock U = 10: band (ii) fidelity 0.858",
            "Gaussian U = 30 tilted: Delta X / d = 3.00",
            "norm drift below 1e-8",
        ],
        params: open_chain,
        controls: wavepackets::defaults,
        run: wavepackets::run,
    },
    Experiment {
        id: "phase-diagram",
        summary: "Band-(ii) Chern number without tilt over the (delta0, Delta0) plane",
        runtime: "~2 min",
        checks: &[
            "(0.8, 2) -> 3 and (0.8, -2) -> -3",
            "antisymmetry under Delta0 -> -Delta0",
            "no cell evaluated on a gap-closing line",
        ],
        params: ModelParams::bound_pump,
        controls: phase_diagram::defaults,
        run: phase_diagram::run,
    },
    Experiment {
        id: "transition-scan",
        summary: "Reduced Chern number of band (ii) across Delta0 = 0 for several tilts",
        runtime: "~8 min",
        checks: &[
            "C_red within 0.05 of +-3 at Delta0 = +-2 for the largest tilt",
            "|C_red| grows with the tilt next to the transition",
        ],
        params: ModelParams::bound_pump,
        controls: transition_scan::defaults,
        run: transition_scan::run,
    },
    Experiment {
        id: "scattering",
        summary: "Scattering-state pumping from Fock states |21,35> and |23,36> on 58 sites",
        runtime: "~1 min",
        checks: &[
            "|21,35>: fidelity 0.9805 with band (v), Delta X / d = 2.9414",
            "|23,36>: fidelity 0.9806 with band (iv), no net motion",
            "|23,36>: final correlation overlaps the initial one",
        ],
        params: ModelParams::scattering,
        controls: scattering::defaults,
        run: scattering::run,
    },
    Experiment {
        id: "resonant",
        summary: "Resonant tunnelling at Delta0 = 20: isolated band, avoided crossings, reduced Chern number, packet transport",
        runtime: "~6 min",
        checks: &[
            "four avoided crossings per T_m",
            "reduced Chern number of the isolated band 3 within 0.02",
            "packet fidelity above 0.99 and Delta X / d = 2.99",
        ],
        params: resonant_chain,
        controls: resonant::defaults,
        run: resonant::run,
    },
    Experiment {
        id: "obc",
        summary: "Open-chain spectrum over one drive period with bound-boson edge states in the bound-band gap",
        runtime: "~30 s",
        checks: &[
            "in-gap states exist and sit on an edge",
            "bound-sector bulk levels lie inside the ring bands",
            "spectrum periodic in T_m",
        ],
        params: ModelParams::bound_pump,
        controls: obc::defaults,
        run: obc::run,
    },
    Experiment {
        id: "momentum",
        summary: "Centre-of-mass momentum density of a band-(ii) packet with and without tilt",
        runtime: "~2 min",
        checks: &[
            "tilted: mean momentum sweeps the zone with period T_B / 2 (2%)",
            "untilted: mean momentum constant within 2% of the zone",
        ],
        params: open_chain,
        controls: momentum::defaults,
        run: momentum::run,
    },
    Experiment {
        id: "doublon-model",
        summary: "Doublon-model reduced Chern numbers, full-model comparison, large-tilt equality with the Chern number and curvature shift invariance",
        runtime: "~10 s",
        checks: &[
            "closed-form C_red = 2.9604 (U = 10) and 2.9921 (U = 30)",
            "full-model C_red(k0 = 0) within 0.02 of the doublon value, k0 spread below 5e-3",
            "wF/w = 1000: per-k0, averaged and lattice values agree within 5e-3",
            "shift residual falls with the tilt",
        ],
        params: ModelParams::bound_pump,
        controls: doublon_model::defaults,
        run: doublon_model::run,
    },
];
