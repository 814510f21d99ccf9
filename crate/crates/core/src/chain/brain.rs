//! The bundled 12-level human-brain band table.
//!
//! Level 1 (a DNA molecule) is the fastest oscillator, level 12 (the body-wide
//! sensory network) the slowest. Each level carries three triplets of three
//! sub-bands, bounds in Hz.

use alloc::string::ToString;
use alloc::vec::Vec;

use super::{BandRole, BandSpec, ChainSpec, LayerSpec};

type Triplet = [(f64, f64); 3];

/// `(level, name, [triplet 1, triplet 2, triplet 3])`.
pub const BRAIN_TABLE: [(u32, &str, [Triplet; 3]); 12] = [
    (1, "EKAM", [[(1e9, 15e9), (16e9, 40e9), (50e9, 75e9)], [(10e12, 19e12), (50e12, 80e12), (100e12, 228e12)], [(1e15, 5e15), (7e15, 10e15), (12e15, 18e15)]]),
    (
        2,
        "DITIYA",
        [[(50e6, 140e6), (180e6, 250e6), (300e6, 400e6)], [(12e9, 18e9), (25e9, 50e9), (100e9, 300e9)], [(8e12, 20e12), (22e12, 30e12), (35e12, 60e12)]],
    ),
    (3, "TRITIYA", [[(15e3, 20e3), (25e3, 80e3), (100e3, 300e3)], [(10e6, 19e6), (20e6, 40e6), (100e6, 228e6)], [(1e9, 5e9), (7e9, 10e9), (15e9, 30e9)]]),
    (
        4,
        "CHATURTHI",
        [[(100.0, 200.0), (250.0, 400.0), (500.0, 800.0)], [(15e3, 20e3), (25e3, 80e3), (100e3, 300e3)], [(500e3, 800e3), (1e6, 5e6), (10e6, 19e6)]],
    ),
    (5, "PANCHAMI", [[(0.1, 1.2), (1.3, 2.5), (3.0, 7.0)], [(8.0, 13.0), (14.0, 80.0), (90.0, 300.0)], [(800.0, 3e3), (4e3, 10e3), (12e3, 30e3)]]),
    (
        6,
        "SASTHI",
        [[(1e-4, 18e-4), (25e-4, 80e-4), (120e-4, 260e-4)], [(1e-1, 8e-1), (10e-1, 25e-1), (30e-1, 50e-1)], [(1.0, 10.0), (10.0, 15.0), (18.0, 30.0)]],
    ),
    (
        7,
        "SAPTAMI",
        [[(6e-6, 25e-6), (30e-6, 80e-6), (105e-6, 260e-6)], [(0.5e-3, 1e-3), (2e-3, 12e-3), (15e-3, 40e-3)], [(0.8e-1, 1.2e-1), (2e-1, 4e-1), (5e-1, 12e-1)]],
    ),
    (
        8,
        "ASTAMI",
        [[(9e-8, 16e-8), (19e-8, 28e-8), (30e-8, 55e-8)], [(3e-6, 15e-6), (16e-6, 26e-6), (35e-6, 65e-6)], [(7e-4, 16e-4), (18e-4, 25e-4), (30e-4, 55e-4)]],
    ),
    (
        9,
        "NAVAMI",
        [
            [(5e-10, 12e-10), (14e-10, 27e-10), (32e-10, 57e-10)],
            [(9e-8, 17e-8), (18e-8, 31e-8), (35e-8, 63e-8)],
            [(8e-6, 16e-6), (17e-6, 28e-6), (30e-6, 53e-6)],
        ],
    ),
    (
        10,
        "DASAMI",
        [
            [(7e-12, 13e-12), (15e-12, 29e-12), (33e-12, 56e-12)],
            [(5e-10, 18e-10), (22e-10, 62e-10), (64e-10, 69e-10)],
            [(0.8e-8, 2.5e-8), (4e-8, 11e-8), (12e-8, 20e-8)],
        ],
    ),
    (
        11,
        "EKADASI",
        [
            [(8e-13, 15e-13), (17e-13, 22e-13), (29e-13, 46e-13)],
            [(3e-11, 9e-11), (12e-11, 22e-11), (25e-11, 40e-11)],
            [(0.7e-9, 1.1e-9), (1.8e-9, 3e-9), (3.1e-9, 5.5e-9)],
        ],
    ),
    (
        12,
        "DASOSHI",
        [
            [(20e-15, 30e-15), (33e-15, 55e-15), (59e-15, 76e-15)],
            [(0.9e-13, 11e-13), (15e-13, 21e-13), (27e-13, 42e-13)],
            [(0.76e-11, 3e-11), (4e-11, 12e-11), (15e-11, 20e-11)],
        ],
    ),
];

/// Chain description of the bundled table.
pub fn brain_spec() -> ChainSpec {
    let layers = BRAIN_TABLE
        .iter()
        .map(|(level, name, triplets)| LayerSpec {
            level: *level,
            name: name.to_string(),
            triplets: triplets
                .iter()
                .map(|t| {
                    [
                        BandSpec::new(BandRole::CouplesLower, t[0].0, t[0].1),
                        BandSpec::new(BandRole::SelfBand, t[1].0, t[1].1),
                        BandSpec::new(BandRole::CouplesUpper, t[2].0, t[2].1),
                    ]
                })
                .collect(),
        })
        .collect::<Vec<_>>();
    ChainSpec { layers }
}
