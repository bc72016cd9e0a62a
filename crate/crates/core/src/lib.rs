pub mod chambers;
pub mod error;
pub mod exact;
pub mod mc_oracle;
pub mod measure_engine;
pub mod multiplicity;
pub mod polyring;
pub mod qmarginal;
pub mod rootdata;
