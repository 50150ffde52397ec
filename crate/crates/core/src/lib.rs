//! Simulation and analysis of a 1→2 probabilistic quantum cloning machine
//! (PQCM) on a three-spin liquid-state NMR register.
//!
//! Qubit `a` (¹H) is the probe, `b` (¹³C) carries the state to be copied and
//! `c` (¹⁹F) receives the copy. Kets are written `|abc⟩` with `a` as the most
//! significant bit throughout.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: states, gates, partial traces, post-selection.
//! * [`cloning`]: cloning angles, the target output, the cloning unitary and
//!   the search for a five-gate circuit realising it.
//! * [`nmr`]: the three-spin Hamiltonian, hard pulses, delays and the
//!   gate-to-pulse compiler.
//! * [`readout`]: carbon-channel peak integrals and the efficiency, Bloch
//!   and fidelity estimators.
//! * [`experiment`]: sweeps, single-point reports and noise calibration
//!   used by the `pqcm` command-line tool.

pub mod cloning;
pub mod error;
pub mod experiment;
pub mod nmr;
pub mod quantum;
pub mod readout;

pub use error::{Error, Result};

/// Qubit index of the probe (¹H).
pub const PROBE: usize = 0;
/// Qubit index of the state to be cloned (¹³C).
pub const ORIGINAL: usize = 1;
/// Qubit index of the blank copy (¹⁹F).
pub const COPY: usize = 2;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/cloning.md")]
    mod cloning {}
    #[doc = include_str!("../../../book/src/layout.md")]
    mod layout {}
    #[doc = include_str!("../../../book/src/pulses.md")]
    mod pulses {}
    #[doc = include_str!("../../../book/src/readout.md")]
    mod readout {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
