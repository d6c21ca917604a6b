//! Benchmark fixtures: the corpus scenes and grid maps of growing size.

use spm_core::engine::EngineConfig;
use spm_core::scenes::{self, CorpusScene};

/// A scene with the resolution it is benchmarked at.
pub struct Fixture {
    pub name: String,
    pub case: CorpusScene,
    pub config: EngineConfig,
}

impl Fixture {
    fn new(name: impl Into<String>, case: CorpusScene, resolution: usize) -> Self {
        Fixture {
            name: name.into(),
            case,
            config: EngineConfig::with_resolution(resolution),
        }
    }
}

/// Every corpus scene at `resolution`.
pub fn corpus(resolution: usize) -> Vec<Fixture> {
    scenes::corpus()
        .into_iter()
        .map(|c| Fixture::new(c.name, c, resolution))
        .collect()
}

/// `n` x `n` square grids for each `n` in `sizes`, at `resolution`.
pub fn grids(sizes: &[usize], resolution: usize) -> Vec<Fixture> {
    sizes
        .iter()
        .map(|&n| Fixture::new(format!("grid{n}"), scenes::grid(n), resolution))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use spm_core::build_spm;

    #[test]
    fn fixtures_build() {
        for f in corpus(16).into_iter().chain(grids(&[2, 3], 16)) {
            build_spm(&f.case.scene, &f.case.sources, &f.config)
                .unwrap_or_else(|e| panic!("{}: {e}", f.name));
        }
        assert_eq!(grids(&[5], 8)[0].case.scene.vertex_count(), 100);
    }
}
