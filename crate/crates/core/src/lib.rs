//! Time-series causal discovery for multivariate daily market data.
//!
//! The pipeline runs unit-root screening and differencing ([`dataset`],
//! [`stattests`]), VAR estimation with information-criterion order selection
//! ([`var`]), VAR-LiNGAM on the VAR residuals ([`lingam`], [`varlingam`]) and a
//! latent-confounder constraint-based search producing a time-series PAG
//! ([`lpcmci`]). [`graphs`] collapses and exports the resulting structures and
//! [`synthbench`] generates ground-truth data for every stage.
//!
//! Estimators are generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the double-precision instantiation used by the command-line tool.

pub mod dataset;
pub mod graphs;
pub mod lingam;
pub mod lpcmci;
mod scalar;
pub mod stattests;
pub mod synthbench;
pub mod var;
pub mod varlingam;

pub use scalar::Scalar;

pub type Dataset = dataset::TimeSeriesDataset<f64>;
pub type Dataset32 = dataset::TimeSeriesDataset<f32>;
pub type VarModel = var::VarModel<f64>;
pub type VarModel32 = var::VarModel<f32>;
pub type InstantaneousModel = lingam::InstantaneousModel<f64>;
pub type VarLingamModel = varlingam::VarLingamModel<f64>;
pub type VarLingamModel32 = varlingam::VarLingamModel<f32>;
pub type LaggedDag = graphs::LaggedDag<f64>;

