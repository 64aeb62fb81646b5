use opinion_core::fixtures::FixtureCatalog;
use opinion_core::io::system_to_json;
use sha2::{Digest, Sha256};

const CATALOG_SHA256: &str = "8b48d4f55f83e442ba91d86f50aeea110ea92036778d658fe610fa96ea052245";

#[test]
fn catalog_matches_pinned_checksum() {
    let mut hasher = Sha256::new();
    for (name, _, sys) in FixtureCatalog::new().entries() {
        hasher.update(name.as_bytes());
        hasher.update(system_to_json(sys).as_bytes());
    }
    let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(digest, CATALOG_SHA256);
}
