use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysioError {
    #[error("series too short: need at least {needed} s, got {got:.3} s")]
    SeriesTooShort { needed: f64, got: f64 },
    #[error("every RR interval was rejected as an artifact")]
    AllArtifacts,
    #[error("non-uniform sampling at sample {index}")]
    NonUniformSampling { index: usize },
    #[error("sample rate {rate} Hz is below the required {min} Hz")]
    LowSampleRate { rate: f64, min: f64 },
    #[error("invalid value {value} at index {index}")]
    InvalidValue { index: usize, value: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("zero variance: correlation undefined")]
    ZeroVariance,
    #[error("invalid filter design: {0}")]
    InvalidFilter(String),
}
