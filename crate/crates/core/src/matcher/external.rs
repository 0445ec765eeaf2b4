//! Runs a matching system as a subprocess over files.

use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{check_provenance, Matcher, MatcherError};
use crate::alignment::{read_alignment, write_alignment, Alignment};
use crate::rdf::{write_ntriples, KnowledgeGraph};

const PLACEHOLDERS: [&str; 4] = ["{source}", "{target}", "{inputAlignment}", "{outputAlignment}"];
const STDERR_EXCERPT: usize = 2000;

/// `command_template` is split shell-style; every placeholder is replaced
/// by the path of the corresponding file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalMatcherConfig {
    pub command_template: String,
    pub timeout: Duration,
    pub work_dir: PathBuf,
}

impl ExternalMatcherConfig {
    pub fn validate(&self) -> Result<Vec<String>, MatcherError> {
        let missing: Vec<&str> = PLACEHOLDERS.iter().copied().filter(|p| !self.command_template.contains(p)).collect();
        if !missing.is_empty() {
            return Err(MatcherError::InvalidConfig(format!("command template lacks {}", missing.join(", "))));
        }
        if self.timeout.is_zero() {
            return Err(MatcherError::InvalidConfig("timeout must be positive".into()));
        }
        let args = shlex::split(&self.command_template)
            .ok_or_else(|| MatcherError::InvalidConfig("command template has unbalanced quotes".into()))?;
        if args.is_empty() {
            return Err(MatcherError::InvalidConfig("command template is empty".into()));
        }
        Ok(args)
    }
}

#[derive(Debug, Clone)]
pub struct ExternalMatcher {
    name: String,
    config: ExternalMatcherConfig,
    args: Vec<String>,
    calls: Arc<AtomicUsize>,
}

impl ExternalMatcher {
    pub fn new(name: impl Into<String>, config: ExternalMatcherConfig) -> Result<Self, MatcherError> {
        let args = config.validate()?;
        Ok(ExternalMatcher { name: name.into(), config, args, calls: Arc::new(AtomicUsize::new(0)) })
    }
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn excerpt(stderr: &[u8]) -> String {
    let text = String::from_utf8_lossy(stderr);
    let trimmed = text.trim();
    match trimmed.char_indices().nth(STDERR_EXCERPT) {
        Some((cut, _)) => format!("{}...", &trimmed[..cut]),
        None => trimmed.to_string(),
    }
}

impl Matcher for ExternalMatcher {
    fn name(&self) -> &str {
        &self.name
    }

    fn match_kgs(
        &mut self,
        source: &KnowledgeGraph,
        target: &KnowledgeGraph,
        input: &Alignment,
    ) -> Result<Alignment, MatcherError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        let dir = self.config.work_dir.join(format!("{call:04}-{}-{}", sanitize(source.id()), sanitize(target.id())));
        std::fs::create_dir_all(&dir)?;
        let paths = [dir.join("source.nt"), dir.join("target.nt"), dir.join("input.tsv"), dir.join("output.tsv")];
        std::fs::write(&paths[0], write_ntriples(source))?;
        std::fs::write(&paths[1], write_ntriples(target))?;
        std::fs::write(&paths[2], write_alignment(input))?;

        let args: Vec<String> = self
            .args
            .iter()
            .map(|arg| {
                PLACEHOLDERS
                    .iter()
                    .zip(&paths)
                    .fold(arg.clone(), |acc, (p, path)| acc.replace(p, &path.to_string_lossy()))
            })
            .collect();

        let mut child = Command::new(&args[0])
            .args(&args[1..])
            .current_dir(&dir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()?;
        let mut stderr_pipe = child.stderr.take().expect("piped");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr_pipe.read_to_end(&mut buf);
            buf
        });

        let started = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if started.elapsed() >= self.config.timeout {
                let _ = child.kill();
                let _ = child.wait();
                let _ = reader.join();
                return Err(MatcherError::Timeout(self.config.timeout));
            }
            std::thread::sleep(Duration::from_millis(10));
        };
        let stderr = reader.join().unwrap_or_default();
        std::fs::write(dir.join("stderr.txt"), &stderr)?;
        if !status.success() {
            return Err(MatcherError::NonZeroExit { code: status.code(), stderr: excerpt(&stderr) });
        }

        let bytes = std::fs::read(&paths[3])
            .map_err(|e| MatcherError::InvalidOutput(format!("cannot read {}: {e}", paths[3].display())))?;
        let output = read_alignment(&bytes).map_err(|e| MatcherError::InvalidOutput(e.to_string()))?;
        check_provenance(&output, source, target)?;
        Ok(output)
    }

    fn fork(&self) -> Box<dyn Matcher> {
        Box::new(self.clone())
    }
}
