//! Rewrites `expected/*.txt` from the current implementation.

use std::fs;
use std::path::Path;

use itt::corpus::{all_examples, record_table};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("expected");
    fs::create_dir_all(&dir)?;
    for case in all_examples() {
        let path = dir.join(format!("{}.txt", case.name));
        fs::write(&path, record_table(&case))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
