use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operands live in different fields (p = {left} vs p = {right})")]
    ModulusMismatch { left: u64, right: u64 },

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("{value} is not a usable Fourier prime: {reason}")]
    BadModulus { value: u64, reason: &'static str },

    #[error("residue {value} is not canonical modulo {modulus}")]
    NonCanonical { value: u64, modulus: u64 },

    #[error(
        "transform size {size} unsupported by p = {modulus}: needs 2-adicity {required}, field has {available}"
    )]
    UnsupportedSize {
        size: usize,
        modulus: u64,
        required: u32,
        available: u32,
    },

    #[error("no Fourier prime with 2-adicity >= {two_adicity} below 2^{bits}")]
    NoFourierPrime { two_adicity: u32, bits: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("plan file version mismatch: expected `{expected}`, found `{found}`")]
    VersionMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
