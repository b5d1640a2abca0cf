//! Measuring foreign landslide coverage in German newspapers: corpus
//! ingestion, LLM geolocation, event segmentation, salience scoring and
//! comparison against external disaster records.

pub mod config;
pub mod corpus;
pub mod evaluate;
pub mod events;
pub mod geolocate;
pub mod pipeline;
pub mod reference;
pub mod report;
pub mod salience;
