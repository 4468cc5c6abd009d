//! Model documents, reports, timed sweeps, the command-line tool and the
//! HTTP session service built on [`mbd_core`].

pub mod cli;
pub mod document;
pub mod options;
pub mod report;
pub mod service;
pub mod sweep;
