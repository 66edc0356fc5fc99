//! Borel–Cantelli laboratory for topological Markov chains and hyperbolic
//! toral maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`shift`]: transition matrices, intervals, cylinders.
//! * [`gibbs`]: Markov Gibbs measures of locally constant potentials and
//!   exact cylinder, joint and correlation evaluation.
//! * [`exact`]: exact arithmetic in quadratic fields for Bernoulli and
//!   two-symbol Parry measures.
//! * [`bc`]: target sequences, expected hit counts, the correlation-sum
//!   verifier and generators for derived counterexample sequences.
//! * [`orbit`]: stationary orbit sampling and hit statistics.
//! * [`toral`]: linear hyperbolic toral automorphisms, rectangles, periodic
//!   point counts and the baker map.
//! * [`io`]: JSON document formats.

pub mod bc;
pub mod exact;
pub mod gibbs;
pub mod io;
pub mod orbit;
pub mod shift;
pub mod stats;
pub mod toral;

pub use bc::{Alignment, CylinderSequence, SpReport};
pub use gibbs::{MarkovGibbs, Potential};
pub use orbit::{HitStatistics, SymbolicOrbit};
pub use shift::{Cylinder, Interval, TransitionMatrix};
pub use toral::{Rectangle, ToralMap};
