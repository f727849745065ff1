use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    ConfigParse(String),
    #[error("csv schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("no result rows in {0}")]
    EmptyCsv(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Feel(#[from] moac_feel::FeelError),
}
