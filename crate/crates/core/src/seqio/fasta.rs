use std::io::{self, Write};
use std::path::Path;

use super::{is_residue_byte, split_header, SeqIoError, SequenceRecord};

const LINE_WIDTH: usize = 60;

/// Iterates lines with their 1-based number, stripping `\r\n` and trailing
/// whitespace.
pub(super) fn lines(input: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    let mut it = input.split(|&b| b == b'\n').enumerate().peekable();
    std::iter::from_fn(move || {
        let (i, line) = it.next()?;
        // trailing empty fragment after the final newline
        if it.peek().is_none() && line.is_empty() {
            return None;
        }
        let end = line.iter().rposition(|b| !b.is_ascii_whitespace()).map_or(0, |p| p + 1);
        Some((i + 1, &line[..end]))
    })
}

/// Parses FASTA text into records. Sequence lines are concatenated and
/// uppercased; blank lines anywhere are skipped.
pub fn parse_fasta(input: &[u8]) -> Result<Vec<SequenceRecord>, SeqIoError> {
    let mut records = Vec::new();
    let mut current: Option<(usize, SequenceRecord)> = None;

    let finish = |cur: Option<(usize, SequenceRecord)>, out: &mut Vec<SequenceRecord>| {
        if let Some((line, rec)) = cur {
            if rec.residues.is_empty() {
                return Err(SeqIoError::malformed(line, format!("record {:?} has an empty sequence body", rec.id)));
            }
            out.push(rec);
        }
        Ok(())
    };

    for (line_no, line) in lines(input) {
        if line.is_empty() {
            continue;
        }
        if line[0] == b'>' {
            finish(current.take(), &mut records)?;
            let header = std::str::from_utf8(&line[1..])
                .map_err(|_| SeqIoError::malformed(line_no, "header is not valid UTF-8"))?;
            let (id, description) = split_header(header);
            if id.is_empty() {
                return Err(SeqIoError::malformed(line_no, "record with empty id"));
            }
            current = Some((line_no, SequenceRecord { id, description, residues: Vec::new(), quality: None }));
            continue;
        }
        let Some((_, rec)) = current.as_mut() else {
            return Err(SeqIoError::malformed(line_no, "expected '>' header before sequence data"));
        };
        for &b in line {
            if !is_residue_byte(b) {
                return Err(SeqIoError::malformed(line_no, format!("invalid residue byte {:?}", b as char)));
            }
            rec.residues.push(b.to_ascii_uppercase());
        }
    }
    finish(current, &mut records)?;
    Ok(records)
}

/// Writes records as FASTA, wrapping sequence lines at 60 columns.
pub fn write_fasta<W: Write>(mut out: W, records: &[SequenceRecord]) -> io::Result<()> {
    for rec in records {
        writeln!(out, ">{}", rec.header())?;
        for chunk in rec.residues.chunks(LINE_WIDTH) {
            out.write_all(chunk)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_fasta_file(path: impl AsRef<Path>) -> Result<Vec<SequenceRecord>, SeqIoError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| SeqIoError::io(path, e))?;
    parse_fasta(&bytes)
}

pub fn write_fasta_file(path: impl AsRef<Path>, records: &[SequenceRecord]) -> Result<(), SeqIoError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| SeqIoError::io(path, e))?;
    let mut w = io::BufWriter::new(file);
    write_fasta(&mut w, records).map_err(|e| SeqIoError::io(path, e))?;
    w.flush().map_err(|e| SeqIoError::io(path, e))
}
