use rigidity::rankone::RankOneError;
use rigidity::skew::SkewError;
use rigidity::spectral::SpectralError;
use rigidity::substitution::SubstitutionError;
use serde::Serialize;
use serde_json::Value;
use std::path::Path;

/// What a command produced: the `result` part of the report and an
/// optional CSV series.
pub struct Output {
    pub result: Value,
    pub csv: Option<String>,
}

impl Output {
    pub fn json<T: Serialize>(result: &T) -> Self {
        Output { result: serde_json::to_value(result).expect("results serialize"), csv: None }
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

/// Machine-readable error record; `kind` is the module's error name.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: String,
    pub module: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: "InvalidConfig".into(), module: "cli", message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError { kind: "IoError".into(), module: "cli", message: format!("{}: {e}", path.display()) }
    }
}

macro_rules! from_module {
    ($t:ty, $module:literal) => {
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError { kind: e.name().into(), module: $module, message: e.to_string() }
            }
        }
    };
}

from_module!(SubstitutionError, "substitution");
from_module!(RankOneError, "rankone");
from_module!(SkewError, "skew");
from_module!(SpectralError, "spectral");

/// `n,value,error_bound` rows.
pub fn bounded_csv(rows: impl IntoIterator<Item = (String, f64, f64)>) -> String {
    let mut s = String::from("n,value,error_bound\n");
    for (n, v, e) in rows {
        s.push_str(&format!("{n},{v},{e}\n"));
    }
    s
}
