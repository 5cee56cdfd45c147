//! Process exit codes and the error type that carries them.

use std::fmt;

pub const VALIDATION: i32 = 2;
pub const ESTIMATION: i32 = 3;
pub const REPLICATION: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub trait WithCode<T> {
    fn code(self, code: i32) -> CliResult<T>;
    fn invalid(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.code(VALIDATION)
    }
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: i32) -> CliResult<T> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

pub fn fail<T>(code: i32, msg: impl fmt::Display) -> CliResult<T> {
    Err(Failure {
        code,
        error: anyhow::anyhow!("{msg}"),
    })
}
