//! Reading LIBSVM text, splitting it across clients and writing it back.
//! Pass a path (plain or .gz) to read a real file instead of the inline one.

use shiftfl::dataio::{load_libsvm, parse_libsvm, partition, write_libsvm};

const INLINE: &str = "+1 3:1 11:1 14:1\n-1 5:1 7:1 14:1\n-1 1:1 6:1 14:1\n+1 2:1 6:1 17:0.5\n\
                      -1 3:1 7:1 16:1\n-1 1:1 9:1 15:1\n+1 4:1 8:1 17:1\n";

fn main() -> shiftfl::Result<()> {
    let (samples, d) = match std::env::args().nth(1) {
        Some(p) => load_libsvm(p.as_ref())?,
        None => parse_libsvm(INLINE.as_bytes())?,
    };
    let positive = samples.iter().filter(|s| s.label == 1).count();
    println!("{} rows, d = {d}, {positive} positive", samples.len());
    let p = partition(&samples, 3, 0)?;
    for (i, ids) in p.ids.iter().enumerate() {
        println!("client {i}: rows {ids:?}");
    }
    println!("dropped {:?}", p.dropped);
    print!("{}", write_libsvm(&p.shards[0]));
    Ok(())
}
