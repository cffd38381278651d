use std::io::{self, Write};

use super::fasta::lines;
use super::{is_residue_byte, split_header, SeqIoError, SequenceRecord};

/// Parses four-line FASTQ records. Blank lines are allowed between records
/// but not inside one; the `+` line may repeat the header verbatim.
pub fn parse_fastq(input: &[u8]) -> Result<Vec<SequenceRecord>, SeqIoError> {
    let mut records = Vec::new();
    let mut it = lines(input);

    while let Some((line_no, header)) = it.by_ref().find(|(_, l)| !l.is_empty()) {
        if header[0] != b'@' {
            return Err(SeqIoError::malformed(line_no, "expected '@' header"));
        }
        let header_text = std::str::from_utf8(&header[1..])
            .map_err(|_| SeqIoError::malformed(line_no, "header is not valid UTF-8"))?;
        let (id, description) = split_header(header_text);
        if id.is_empty() {
            return Err(SeqIoError::malformed(line_no, "record with empty id"));
        }

        let mut next = |what: &str| {
            it.next()
                .filter(|(_, l)| !l.is_empty())
                .ok_or_else(|| SeqIoError::malformed(line_no, format!("record {id:?} truncated before {what}")))
        };

        let (seq_no, seq) = next("sequence line")?;
        let (plus_no, plus) = next("'+' line")?;
        let (qual_no, qual) = next("quality line")?;

        let mut residues = Vec::with_capacity(seq.len());
        for &b in seq {
            if !is_residue_byte(b) {
                return Err(SeqIoError::malformed(seq_no, format!("invalid residue byte {:?}", b as char)));
            }
            residues.push(b.to_ascii_uppercase());
        }
        if plus[0] != b'+' {
            return Err(SeqIoError::malformed(plus_no, "expected '+' separator"));
        }
        if plus.len() > 1 && plus[1..] != header[1..] {
            return Err(SeqIoError::malformed(plus_no, "'+' line does not repeat the header"));
        }
        if let Some(&b) = qual.iter().find(|b| !(b'!'..=b'~').contains(*b)) {
            return Err(SeqIoError::malformed(qual_no, format!("invalid quality byte {b}")));
        }
        if qual.len() != residues.len() {
            return Err(SeqIoError::malformed(
                qual_no,
                format!("quality length {} differs from sequence length {}", qual.len(), residues.len()),
            ));
        }
        records.push(SequenceRecord { id, description, residues, quality: Some(qual.to_vec()) });
    }
    Ok(records)
}

/// Writes records as FASTQ. Every record must carry quality.
pub fn write_fastq<W: Write>(mut out: W, records: &[SequenceRecord]) -> io::Result<()> {
    for rec in records {
        let qual = rec.quality.as_deref().ok_or_else(|| {
            io::Error::new(io::ErrorKind::InvalidInput, format!("record {:?} has no quality", rec.id))
        })?;
        writeln!(out, "@{}", rec.header())?;
        out.write_all(&rec.residues)?;
        out.write_all(b"\n+\n")?;
        out.write_all(qual)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
