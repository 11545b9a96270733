//! Planning for demand-adaptive bus lines: a fixed chain of compulsory stops
//! with time windows plus optional stops served on request.
//!
//! * [`model`]: domain types, validation and the instance document format.
//! * [`routing`]: exact full-information acceptance and routing.
//! * [`policies`]: online accept/reject rules (two-stage stochastic, consensus, myopic).
//! * [`gen`]: synthetic lines, OD fitting, instances and demand scenarios.
//! * [`sim`]: rolling-horizon episodes, metrics and the Bellman reference value.

pub mod gen;
pub mod model;
pub mod policies;
pub mod routing;
pub mod sim;
