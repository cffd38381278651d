//! Deterministic synthetic reference and query ladder.

use dsa::cli::gen::{generate, write_dataset, DatasetGenConfig};

fn main() {
    let config = DatasetGenConfig {
        seed: 42,
        target_reference_residues: 50_000,
        query_lengths: vec![8, 64, 512],
        ..Default::default()
    };
    let data = generate(&config).unwrap();
    assert_eq!(data, generate(&config).unwrap());
    println!("{} reference records, {} residues", data.reference.len(), data.reference_residues());
    for q in &data.queries {
        println!("{} {}", q.id, String::from_utf8_lossy(&q.residues[..q.len().min(16)]));
    }

    let dir = tempfile::tempdir().unwrap();
    let (r, q) = write_dataset(&data, dir.path()).unwrap();
    println!("wrote {} and {}", r.display(), q.display());
}
