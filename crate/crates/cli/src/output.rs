use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliResult, Stage};

/// Output directory for one run. Files registered through [`OutputDir::file`]
/// are deleted again unless [`OutputDir::commit`] is called, and a
/// directory this run created is removed with them.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    created: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        let created = !root.exists();
        fs::create_dir_all(root).stage("create output directory")?;
        Ok(Self {
            root: root.to_path_buf(),
            created,
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path for `name` inside the directory, tracked for cleanup.
    pub fn file(&mut self, name: impl AsRef<Path>) -> PathBuf {
        let path = self.root.join(name);
        self.written.push(path.clone());
        path
    }

    /// Like [`OutputDir::file`] for outputs that bring extra files along.
    pub fn file_with(
        &mut self,
        name: impl AsRef<Path>,
        extra: impl FnOnce(&Path) -> PathBuf,
    ) -> PathBuf {
        let path = self.file(name);
        self.written.push(extra(&path));
        path
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if self.created {
            let _ = fs::remove_dir_all(&self.root);
        }
    }
}
