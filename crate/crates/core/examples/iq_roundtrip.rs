//! Synthesize a scene from the default configuration, store it as an IQ
//! recording and sense it back from disk.

use specsense::cli::config::RunConfig;
use specsense::cli::{synthesize, IqRecording, SceneKind};
use specsense::integrate::integrated_sense;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("specsense-iq-example");
    std::fs::create_dir_all(&dir)?;
    for kind in [SceneKind::Tone, SceneKind::Wideband, SceneKind::Noise] {
        let mut config = RunConfig::default();
        config.scene.kind = kind;
        let (buffer, truth) = synthesize(&config)?;
        let path = dir.join(format!("{kind:?}.iq").to_lowercase());
        std::fs::write(&path, IqRecording::from_buffer(&buffer).to_bytes())?;

        let back = IqRecording::from_bytes(&std::fs::read(&path)?)?.to_buffer()?;
        let report = integrated_sense(&back, &config.detector, &config.wavelet, &config.router)?;
        println!("{} ({} samples)", path.display(), back.len());
        println!("  expected {:?}, got {:?}", truth.expected_path, report.path());
        if let Some(d) = report.decision() {
            println!("  decision {:?}", d.hypothesis);
        }
        if let Some(map) = report.occupancy() {
            println!("  planted  {:?}", truth.occupancy.iter().map(|b| b.status).collect::<Vec<_>>());
            println!("  detected {:?}", map.statuses());
        }
    }
    Ok(())
}
