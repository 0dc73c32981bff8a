//! Regenerate `data/langid/<code>.tsv` from the sample texts.
//!
//! cargo run -p vmwe-core --example build_langid_profiles

use std::path::Path;

use vmwe_core::mt::langid::build_profiles;

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/langid");
    let mut profiles: Vec<_> = build_profiles().into_iter().collect();
    profiles.sort_by_key(|(lang, _)| *lang);
    for (lang, profile) in profiles {
        let path = dir.join(format!("{}.tsv", lang.code()));
        std::fs::write(&path, profile.to_tsv())?;
        println!("{} trigrams -> {}", profile.len(), path.display());
    }
    Ok(())
}
