//! Split a reference into shards with a manifest, then load them back.

use dsa::seqio::{load_partition, partition_reference, PartitionManifest, SequenceRecord};

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let reference: Vec<_> =
        (0..10).map(|i| SequenceRecord::new(format!("chr{i}"), "ACGT".repeat(10 + i * 5))).collect();

    let manifest = partition_reference(&reference, 200, dir.path()).unwrap();
    print!("{}", manifest.to_text());

    let reread = PartitionManifest::read(manifest.manifest_path()).unwrap();
    for entry in &reread.partitions {
        let part = load_partition(&reread, entry.partition_id).unwrap();
        let ids: Vec<_> = part.records.iter().map(|r| r.id.as_str()).collect();
        println!("partition {}: {} residues {:?}", entry.partition_id, part.residue_count(), ids);
    }
}
