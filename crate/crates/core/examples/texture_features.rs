//! GLCM/Haralick and LBP descriptors of a no-crystal and a strong image.
//!
//! ```text
//! cargo run --release --example texture_features
//! ```

use diffract::dataset::{ClassLabel, SimConfig, Simulator};
use diffract::features::{FeatureExtractor, GlcmParams, LbpParams};

fn main() -> anyhow::Result<()> {
    let sim = Simulator::new(SimConfig::default())?;
    let extractors = [
        FeatureExtractor::Glcm(GlcmParams::new(&[1, 5], &[0, 90])),
        FeatureExtractor::Lbp(LbpParams::new(8, 1.0)),
    ];
    for label in [ClassLabel::NoCrystal, ClassLabel::Strong] {
        let spec = sim.config().class_spec(label).unwrap();
        let image = sim.generate(spec, 3)?.image;
        println!("== {label}");
        for ex in &extractors {
            let v = ex.extract(&image)?;
            println!("  {}", v.schema);
            for (name, value) in ex.feature_names().iter().zip(&v.values) {
                println!("    {name:<24} {value:>12.6}");
            }
        }
    }
    Ok(())
}
