//! Parse FASTA and FASTQ, convert between them.

use dsa::seqio::{convert, parse_any, SeqFormat};

fn main() {
    let fasta = b">read1 first\nACGTAC\nGTT\n>read2\nggccaa\n";
    let records = parse_any(fasta).expect("valid FASTA");
    for r in &records {
        println!("{} ({} residues): {}", r.header(), r.len(), String::from_utf8_lossy(&r.residues));
    }

    let fastq = convert(&records, SeqFormat::Fastq, b'I').unwrap();
    print!("{}", String::from_utf8_lossy(&fastq));

    let back = convert(&parse_any(&fastq).unwrap(), SeqFormat::Fasta, b'I').unwrap();
    assert_eq!(parse_any(&back).unwrap(), records);

    match parse_any(b">x\nAC GT\n") {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
}
