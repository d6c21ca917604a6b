use spm_core::engine::{build_spm, build_spm_reference, EngineConfig};
use spm_core::scenes;

// The tiled engine culls hidden edges and skips whole tiles; none of that
// may change a single pixel.
#[test]
fn tiled_engine_matches_reference_on_corpus() {
    let config = EngineConfig::with_resolution(96);
    for c in scenes::corpus().into_iter().chain([scenes::grid(7)]) {
        let fast = build_spm(&c.scene, &c.sources, &config).unwrap();
        let slow = build_spm_reference(&c.scene, &c.sources, &config).unwrap();
        let fb = &fast.framebuffer;
        for (k, (a, b)) in fb.pixels().iter().zip(slow.framebuffer.pixels()).enumerate() {
            let (i, j) = (k % 96, k / 96);
            assert_eq!(a, b, "{} pixel ({i}, {j}) at {}", c.name, fb.center(i, j));
        }
        assert_eq!(fast.data, slow.data, "{}", c.name);
        assert_eq!(fast.expansions, slow.expansions, "{}", c.name);
    }
}
