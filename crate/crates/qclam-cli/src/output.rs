use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use qclam::io::write_pgm;
use qclam::Result;

/// Output directory. Every artifact goes through here, one file at a time.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut f = self.file(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    pub fn with_writer(&self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut f = self.file(name)?;
        write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    /// `<stem>.pgm` plus `<stem>.pgm.json` with the scaling.
    pub fn heatmap(&self, stem: &str, width: usize, height: usize, values: &[f64]) -> Result<()> {
        let name = format!("{stem}.pgm");
        let mut f = self.file(&name)?;
        let scaling = write_pgm(&mut f, width, height, values)?;
        f.flush()?;
        self.json(&format!("{name}.json"), &scaling)
    }
}
