//! Auditing belief-updating rules against the Blackwell order.
//!
//! [`auditor::audit`] is the entry point; [`auditor::verify_certificate`]
//! re-checks its output without any auditor state.

pub mod auditor;
pub mod cli;
pub mod decision;
pub mod distortions;
pub mod experiments;
pub mod lp;
pub mod par;
pub mod simplex;
