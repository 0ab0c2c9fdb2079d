#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod domain;
pub mod eigen;
pub mod evolution;
pub mod io;
pub mod nonlinearity;
pub mod postprocess;
