//! Exact computation of stability thresholds for flags on Fano threefolds.
//!
//! The pipeline takes numerical intersection data — a threefold trilinear
//! form, flag-surface lattices, restriction maps, and a supplied chamberwise
//! decomposition of `-K_X - u·Y` — and computes the expected vanishing
//! orders `S(·)` of the associated flag valuations, together with the local
//! lower bound on the stability threshold they certify. Every number is an
//! exact rational; there is no floating point anywhere in the main path.

pub mod exactnum;
pub mod azpipe;
pub mod lattices;
pub mod zariski;
pub mod corpus;
