//! Hybrid quantum-classical toolchain: parser, elaborator, instruction IR,
//! statevector backend and host/QPU node runtime.

pub mod backend;
pub mod diag;
pub mod elaborator;
pub mod frontend;
pub mod node;
pub mod qir;
pub mod stdlib;
