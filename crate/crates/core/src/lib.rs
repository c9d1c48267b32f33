//! Numerical core for predicting welfare measures from satellite-image
//! features and high-frequency weather.
//!
//! The crate is `no_std` (it needs `alloc`) and does no IO. It covers:
//!
//! * [`welfare`]: pooled asset matrices, the first-principal-component asset
//!   index and log per-capita consumption targets,
//! * [`weather`]: 30-day windows and the 48-value monthly quintile vector,
//! * [`composite`]: cloud-masked median compositing and center cropping,
//! * [`regress`]: feature fusion, closed-form ridge and group-aware
//!   cross-validation of the shrinkage parameter,
//! * [`diagnose`]: R², within/total sum-of-squares ratios and ECDFs,
//! * [`gridmap`]: regular lon/lat grids and gridded predictions,
//! * [`synth`]: seeded synthetic scenarios with a known variance budget.
//!
//! File formats, the pipeline and the command line live in the companion
//! `welfarecast` crate.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod composite;
pub mod date;
pub mod diagnose;
mod error;
pub mod gridmap;
pub mod linalg;
pub mod regress;
pub mod synth;
pub mod types;
pub mod weather;
pub mod welfare;

pub use date::Date;
pub use error::{Error, Result};
pub use types::{
    AssetInventory, DailyWeatherRecord, EnumerationAreaVisit, HouseholdConsumptionRecord,
    ImageFeatureRecord, Source, Visit, VisitKey, IMAGE_FEATURES, IMAGE_FEATURES_PER_SOURCE,
};
