//! Simulation and training engine for quantum denoising autoencoders.
//!
//! The crate is organized around the data flow of a denoising experiment:
//!
//! * [`linops`] — dense complex linear algebra on multi-qubit registers:
//!   states, density matrices, tensor products, partial traces, Pauli
//!   bases and Hermitian matrix exponentials with derivatives.
//! * [`states`] — GHZ-family target states and construction of training
//!   and test datasets from independently noised copies.
//! * [`noise`] — spin-flip, depolarizing and random-unitary noise, both
//!   as channels on density matrices and as per-shot samplers.
//! * [`qnn`] — network topologies, neuron unitaries and the layered
//!   quantum channel they induce.
//! * [`train`] — cost/validation functions, analytic gradients and the
//!   Nadam training loop.
//! * [`harness`] — experiment configurations, sweeps over noise
//!   strengths, analytic baselines and CSV metrics.

pub mod error;
pub mod harness;
pub mod linops;
pub mod noise;
pub mod qnn;
pub mod states;
pub mod train;

mod engine;
mod stream;

pub use error::{Error, Result};
