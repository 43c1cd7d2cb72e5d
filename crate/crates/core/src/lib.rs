//! Packet-level discrete-event simulator of data-center fan-in micro-bursts.

pub mod analysis;
pub mod checks;
pub mod config;
pub mod engine;
pub mod marking;
pub mod net;
pub mod output;
pub mod run;
pub mod scenarios;
pub mod sim;
pub mod transport;
pub mod units;
