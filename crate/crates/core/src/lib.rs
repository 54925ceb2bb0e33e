pub mod arith;
pub mod bounds;
pub mod quadfield;
pub mod realcf;
pub mod verifier;
pub mod report;
pub mod sweep;
