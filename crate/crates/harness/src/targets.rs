use std::path::{Path, PathBuf};

use persistent_sampling::targets::{by_name, load_german_credit, Target};

use crate::error::Result;

/// Environment variable naming the UCI German credit file.
pub const CREDIT_ENV: &str = "GERMAN_CREDIT_PATH";

/// A constructed target and a description of the data it was built from.
pub struct LoadedTarget {
    pub target: Box<dyn Target>,
    pub data_source: String,
}

/// Builds `name`. For `logistic`, the environment variable wins over
/// `credit_path`; with neither, the synthetic stand-in table is used.
pub fn load_target(name: &str, credit_path: Option<&Path>) -> Result<LoadedTarget> {
    if name != "logistic" {
        let target = by_name(name, None)?;
        let data_source = match name {
            "funnel" => "checked-in funnel data".to_string(),
            _ => "none".to_string(),
        };
        return Ok(LoadedTarget { target, data_source });
    }
    let path = std::env::var_os(CREDIT_ENV)
        .map(PathBuf::from)
        .or_else(|| credit_path.map(Path::to_path_buf));
    match path {
        Some(p) => {
            let data = load_german_credit(&p)?;
            Ok(LoadedTarget {
                target: by_name(name, Some(data))?,
                data_source: format!("german credit file {}", p.display()),
            })
        }
        None => Ok(LoadedTarget {
            target: by_name(name, None)?,
            data_source: "synthetic german-credit stand-in (seed 0)".to_string(),
        }),
    }
}
