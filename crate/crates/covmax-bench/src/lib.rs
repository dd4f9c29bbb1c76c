//! Deterministic fixtures for the pipeline benchmarks.
//!
//! Everything here is seeded so that successive `cargo bench` runs measure
//! the same arithmetic on the same bits; criterion's run-to-run comparisons
//! are meaningless otherwise.

use covmax::processes::{ar1_coeffs, CoeffSource, LongMemoryParams, LongMemoryVariant};
use covmax::{DataMatrix, GeneratorSpec, InnovationDist};

/// I.i.d. standard-normal matrix.
pub fn iid_matrix(n: usize, m: usize, seed: u64) -> DataMatrix {
    let spec = GeneratorSpec::Iid { innovations: InnovationDist::StandardNormal };
    spec.generate(n, m, seed).expect("iid fixture")
}

/// Rows follow an AR(1)-shaped linear process with short memory.
pub fn ar1_spec(phi: f64, truncation: usize) -> GeneratorSpec {
    GeneratorSpec::StationaryLinear {
        coeffs: CoeffSource::Explicit { coeffs: ar1_coeffs(phi, truncation).expect("ar1 coeffs") },
        innovations: InnovationDist::StandardNormal,
    }
}

/// Rows follow the power-law long-memory process — the costliest generator
/// in the family, since every observation convolves the full coefficient
/// window.
pub fn long_memory_spec(beta: f64, truncation: usize) -> GeneratorSpec {
    GeneratorSpec::StationaryLinear {
        coeffs: CoeffSource::LongMemory {
            long_memory: LongMemoryParams {
                beta,
                truncation,
                variant: LongMemoryVariant::PowerLaw,
            },
        },
        innovations: InnovationDist::StandardNormal,
    }
}
