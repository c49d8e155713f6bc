//! Output directory, manifest, and failure classes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::job::Params;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
    Mismatch(String),
}

impl Failure {
    pub fn code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 1,
            Failure::Compute(_) => 2,
            Failure::Mismatch(_) => 3,
        })
    }

    fn status(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage_error",
            Failure::Compute(_) => "computation_failure",
            Failure::Mismatch(_) => "verification_mismatch",
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Compute(m) => write!(f, "computation failed: {m}"),
            Failure::Mismatch(m) => write!(f, "verification mismatch: {m}"),
        }
    }
}

/// Tags a library error with the pipeline stage that raised it.
pub fn stage(name: &'static str) -> impl Fn(lorenz_psi::Error) -> Failure {
    move |e| match e {
        lorenz_psi::Error::Parse(m) => Failure::Usage(m),
        lorenz_psi::Error::SymbolicCapExceeded { .. } => Failure::Usage(e.to_string()),
        e => Failure::Compute(format!("{name}: {e}")),
    }
}

/// One run: collects output files and stage timings for the manifest.
pub struct Ctx {
    pub command: &'static str,
    pub params: Params,
    pub dir: PathBuf,
    outputs: Vec<String>,
    timings: Vec<(String, f64)>,
    started: Instant,
}

impl Ctx {
    pub fn new(command: &'static str, params: Params) -> Self {
        let dir = params.output_dir();
        Self { command, params, dir, outputs: Vec::new(), timings: Vec::new(), started: Instant::now() }
    }

    pub fn timed<T>(&mut self, label: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push((label.into(), t.elapsed().as_secs_f64()));
        out
    }

    fn ensure_dir(&self) -> Result<(), Failure> {
        fs::create_dir_all(&self.dir).map_err(|e| Failure::Compute(format!("{}: {e}", self.dir.display())))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        self.ensure_dir()?;
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Compute(e.to_string()))?;
        self.write_text(name, &(text + "\n"))
    }

    pub fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| Failure::Compute(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Compute(format!("csv: {e}")))?;
        self.write_text(name, &String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Writes `manifest.json`; timings are the only field that varies
    /// between identical runs.
    pub fn finish(mut self, result: &Result<(), Failure>) -> Result<(), Failure> {
        let (status, message) = match result {
            Ok(()) => ("ok", None),
            Err(f) => (f.status(), Some(f.to_string())),
        };
        let total = self.started.elapsed().as_secs_f64();
        self.timings.push(("total".into(), total));
        let manifest = json!({
            "command": self.command,
            "status": status,
            "message": message,
            "inputs": self.params,
            "versions": {
                "lorenz-psi": lorenz_psi::VERSION,
                "lorenz-psi-cli": env!("CARGO_PKG_VERSION"),
            },
            "timings_seconds": self.timings.iter().map(|(k, v)| json!({"stage": k, "seconds": v})).collect::<Vec<_>>(),
            "outputs": self.outputs,
        });
        self.ensure_dir()?;
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Compute(e.to_string()))? + "\n";
        let path: &Path = &self.dir.join("manifest.json");
        fs::write(path, text).map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))
    }
}

/// Runs `f` over `items` on at most `jobs` threads, keeping input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                slots.lock().unwrap()[k] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<u64> = (0..37).collect();
        assert_eq!(par_map(&items, 4, |x| x * x), items.iter().map(|x| x * x).collect::<Vec<_>>());
    }
}
