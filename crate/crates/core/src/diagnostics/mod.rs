//! Desk-scale checks of the random-matrix statements behind the guarantees:
//! restricted isometry constants, sampled nullspace checks, concentration of
//! `||a||_2^2` and `||P(a a^*)||_2^2`, and moment estimates of Orlicz norms.

pub mod nsp;
pub mod psi;
pub mod rip;
pub mod tails;

pub use nsp::{nsp_sampled_check, NspCheckReport};
pub use psi::psi_r_estimate;
pub use rip::{rip_estimate, rip_exhaustive, rip_sampled, RipEstimate, RipMethod};
pub use tails::{
    calibrate_constants, fourth_order_poly, fourth_order_tail_check, norm_concentration_check,
    wilson_upper, Calibration, TailCheckReport, TailStatistic, CALIBRATION_Z,
};
