use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A value violates a documented domain invariant. The first field names it.
    InvalidInput(&'static str, String),
    /// A charging session cannot fit its energy inside the plug-in window.
    InfeasibleSession { needed_hours: u32, window_hours: u32 },
    /// An alignment is out of window, not left-normalized or does not match the offers.
    InvalidAlignment(String),
    /// An order or profile reaches past the end of the price curve.
    HorizonExceeded { needed: usize, horizon: usize },
    /// A non-conforming aggregate was passed where an exact lot multiple is required.
    NonConforming(u32),
    /// Fleet sampling ran out of retries for one EV.
    RetryBudgetExhausted { ev: usize, retries: u32 },
    /// The exhaustive solver hit its evaluation budget before finishing.
    BudgetExceeded { budget: u64, explored: u64 },
    EmptyInput(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(field, msg) => write!(f, "invalid {field}: {msg}"),
            Error::InfeasibleSession {
                needed_hours,
                window_hours,
            } => write!(
                f,
                "session needs {needed_hours} charging hours but is plugged in for {window_hours}"
            ),
            Error::InvalidAlignment(msg) => write!(f, "invalid alignment: {msg}"),
            Error::HorizonExceeded { needed, horizon } => {
                write!(f, "needs hour {needed} but the price horizon has {horizon} hours")
            }
            Error::NonConforming(id) => {
                write!(f, "aggregate {id} does not conform to the flexible order rules")
            }
            Error::RetryBudgetExhausted { ev, retries } => {
                write!(f, "EV #{ev}: no feasible session after {retries} resamples")
            }
            Error::BudgetExceeded { budget, explored } => write!(
                f,
                "search budget of {budget} evaluations exceeded ({explored} explored, result incomplete)"
            ),
            Error::EmptyInput(what) => write!(f, "{what} must not be empty"),
        }
    }
}

impl core::error::Error for Error {}
