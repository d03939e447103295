//! Canonical parameter sets used across tests, docs, and examples. Each one
//! lands in a different optimal-mechanism regime.
//!
//! The 0.70711 taste is a frozen 5-digit literal, not 1/sqrt(2); downstream
//! expected values are pinned to it.
#![allow(clippy::approx_constant)]

use crate::model::Primitives;

/// Large prior, no service distortion (`delta^2 / dv = 4`).
pub fn p1() -> Primitives {
    Primitives::new(0.0, 2.0, 10.0, 1.0, 2.0, 0.6)
}

/// Large prior, mid distortion regime (`delta^2 / dv` near 0.5).
pub fn p2() -> Primitives {
    Primitives::new(0.0, 0.70711, 10.0, 1.0, 2.0, 0.6)
}

/// Large prior, deep distortion regime (`delta^2 / dv = 0.25`).
pub fn p3() -> Primitives {
    Primitives::new(0.0, 0.5, 10.0, 1.0, 2.0, 0.6)
}

/// Small prior, high taste spread (`delta^2 / dv = 4`).
pub fn p4() -> Primitives {
    Primitives::new(0.0, 2.0, 10.0, 1.0, 2.0, 0.3)
}

/// Small prior, low taste spread (`delta^2 / dv` near 0.25).
pub fn p5() -> Primitives {
    Primitives::new(0.0, 0.70711, 10.0, 1.0, 3.0, 0.3)
}

/// All five fixtures in order.
pub fn all() -> [Primitives; 5] {
    [p1(), p2(), p3(), p4(), p5()]
}
