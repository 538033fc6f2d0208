#![allow(dead_code)]

pub mod corruption;
pub mod log_fixture;
pub mod quorum_sweep;
pub mod wot_oracle;
