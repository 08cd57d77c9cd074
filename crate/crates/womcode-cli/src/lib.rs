//! Library side of the command-line front end: the published golden data and
//! the table-reproduction harness, shared by the binary and the test suites.

pub mod golden;
pub mod harness;
