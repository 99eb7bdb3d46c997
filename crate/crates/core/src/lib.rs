pub mod scalar;
pub mod time;
pub mod wick;
pub mod integrator;
pub mod perturbation;
pub mod qgt;
pub mod linear_exact;
pub mod spectral;
pub mod verify;
pub mod cli;
