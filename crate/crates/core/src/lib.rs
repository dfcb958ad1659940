#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cf;
pub mod dd;
pub mod divisor;
pub mod error;
pub mod expsum;
pub mod moments;
pub mod mp;
pub mod quad;
pub mod report;
pub mod saddle;
pub mod sum;
pub mod zeta;

pub use calibration::Calibration;
pub use divisor::DivisorTable;
pub use error::{Error, Result};
pub use mp::PrecisionComplex;
