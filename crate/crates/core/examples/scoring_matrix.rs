//! Substitution matrices from text, and affine gap costs.

use dsa::scoring::{GapModel, ScoringScheme, SubstitutionMatrix};

fn main() {
    let text = "   A  C  G  T\nA  4 -2 -1 -2\nC -2  4 -2 -1\nG -1 -2  4 -2\nT -2 -1 -2  4\n";
    let m = SubstitutionMatrix::parse_text(text).unwrap();
    println!(
        "alphabet {:?}, range {}..={}, symmetric {}",
        String::from_utf8_lossy(m.alphabet()),
        m.min_score(),
        m.max_score(),
        m.is_symmetric()
    );
    println!("score(A, G) = {}", m.lookup(b'A', b'G').unwrap());

    let gaps = GapModel::new(6, 1).unwrap();
    for len in 1..=4 {
        println!("gap of {len}: cost {}", gaps.cost(len));
    }
    let _scheme = ScoringScheme::new(m, gaps);

    let b62 = SubstitutionMatrix::blosum62();
    println!("BLOSUM62 W/W = {}, W/P = {}", b62.lookup(b'W', b'W').unwrap(), b62.lookup(b'W', b'P').unwrap());

    if let Err(e) = SubstitutionMatrix::parse_text("  A C\nA 1\n") {
        println!("rejected: {e}");
    }
}
