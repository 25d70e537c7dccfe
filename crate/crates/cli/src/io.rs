use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Accuracy(String),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Accuracy(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Accuracy(m) | CliError::Output(m) => f.write_str(m),
        }
    }
}

impl From<horseshoe::Error> for CliError {
    fn from(e: horseshoe::Error) -> Self {
        match e {
            horseshoe::Error::Accuracy { .. } => CliError::Accuracy(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// One finite number per non-blank line.
pub fn read_observations(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => y.push(v),
            _ => {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected a finite number, found '{t}'",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if y.is_empty() {
        return Err(CliError::Usage(format!("{}: no observations", path.display())));
    }
    Ok(y)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let fail = |e: &dyn fmt::Display| CliError::Output(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

pub fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Output(format!("cannot write to standard output: {e}"))),
    }
}

/// `#`-prefixed `key = value` lines followed by CSV rows.
pub struct Report {
    header: Vec<(String, String)>,
    csv: csv::Writer<Vec<u8>>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        let mut csv = csv::Writer::from_writer(Vec::new());
        csv.write_record(columns).expect("in-memory write");
        Self { header: Vec::new(), csv }
    }

    pub fn meta(&mut self, key: &str, value: impl fmt::Display) {
        self.header.push((key.to_string(), value.to_string()));
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.csv.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let mut s: String = self.header.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect();
        s.push_str(&String::from_utf8(self.csv.into_inner().expect("in-memory flush")).expect("utf-8 output"));
        s
    }
}
