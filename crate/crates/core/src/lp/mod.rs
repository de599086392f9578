//! Littlewood-Paley decomposition on the torus.

mod bank;
mod besov;
mod paraproduct;
mod verify;

pub use bank::{chi, phi, Blocks, FilterBank, CHI_INNER, CHI_OUTER};
pub use besov::{
    aggregate, dyadic_weight, lr_aggregate, BesovParams, CheminLernerAccumulator, Lebesgue, TimeExponent,
};
pub use verify::{difference_quotient, BernsteinStats, HolderReport};
