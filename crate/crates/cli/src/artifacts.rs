use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "MANIFEST";

/// Writes files into the output directory and records their hashes.
///
/// The manifest is rewritten after every file, so a run that stops early
/// still leaves an accurate listing of what it produced.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    command: String,
    entries: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl ArtifactWriter {
    pub fn create(dir: &Path, command: &str) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let w = ArtifactWriter {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            entries: Vec::new(),
        };
        w.write_manifest("running")?;
        Ok(w)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(name, _)| name.as_str())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.entries.push((name.to_string(), sha256_hex(bytes)));
        log::info!("wrote {}", self.dir.join(name).display());
        self.write_manifest("running")
    }

    pub fn finish(&self) -> io::Result<()> {
        self.write_manifest("ok")
    }

    pub fn fail(&self, stage: &str, reason: &str) -> io::Result<()> {
        let reason = reason.replace('\n', " ");
        self.write_manifest(&format!("failed at {stage}: {reason}"))
    }

    fn write_manifest(&self, status: &str) -> io::Result<()> {
        let mut text = format!("command: {}\nstatus: {status}\n", self.command);
        for (name, hash) in &self.entries {
            text.push_str(&format!("{hash}  {name}\n"));
        }
        fs::write(self.dir.join(MANIFEST), text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
