mod benchmark;
mod dereverb;
mod evaluate;
mod simulate;

pub use benchmark::benchmark;
pub use dereverb::dereverb;
pub use evaluate::evaluate;
pub use simulate::simulate;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::Failure;

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}
