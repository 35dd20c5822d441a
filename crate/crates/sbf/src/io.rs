use std::path::Path;

use sbf_core::Certificate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::problem_file::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub certificate: Certificate,
}

impl CertificateFile {
    pub fn new(certificate: Certificate) -> Self {
        Self { schema_version: SCHEMA_VERSION, certificate }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    std::fs::write(path, text + "\n").map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_certificate(path: &Path) -> CliResult<Certificate> {
    let file: CertificateFile = read_json(path)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Schema(file.schema_version));
    }
    Ok(file.certificate)
}

pub fn write_certificate(path: &Path, cert: &Certificate) -> CliResult<()> {
    write_json(path, &CertificateFile::new(cert.clone()))
}
