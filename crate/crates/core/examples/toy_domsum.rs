use std::path::Path;

use domsum::summarize::{summarize, ExtractConfig, Method};
use domsum::{load_corpus, train, true_clusters, ModelConfig, ModelKind, PreprocessConfig};

fn main() -> domsum::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let corpus = load_corpus(&dir, &PreprocessConfig::default())?;
    let posterior = train(&corpus, &ModelConfig::new(ModelKind::Stm, 5))?;
    for cluster in true_clusters(&corpus).values() {
        let s = summarize(
            Method::DomSum,
            cluster,
            &corpus,
            Some(&posterior),
            &ExtractConfig::default(),
        )?;
        println!("{}: {}", s.decision_id, s.tokens.join(" "));
    }
    Ok(())
}
