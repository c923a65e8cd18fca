use thiserror::Error;

use crate::model::ValidationIssue;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", join_issues(.0))]
    InvalidInstance(Vec<ValidationIssue>),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible profile: {0}")]
    InfeasibleProfile(String),

    #[error("negative or non-finite input: {0}")]
    NegativeInput(String),

    #[error("valuations differ across players")]
    AsymmetricValuations,

    #[error("every valuation is zero")]
    AllZeroValuations,

    #[error("operation requires {expected} mode")]
    WrongMode { expected: &'static str },

    #[error("operation requires {expected} budgets")]
    WrongBudgetKind { expected: &'static str },

    #[error("player {player} holds more than one ticket")]
    MultiTicketPlayer { player: usize },

    #[error("ticket weights are not all equal")]
    UnequalTicketWeights,

    #[error("operation requires exactly two items, instance has {items}")]
    NotTwoItems { items: usize },

    #[error("best response of player {player} is not attained: item {item} is uncontested and carries no auctioneer ticket")]
    BestResponseNotAttained { player: usize, item: usize },

    #[error("enumeration of {count} {what} exceeds the limit of {limit}")]
    ExplosionGuard { what: &'static str, count: u128, limit: u128 },

    #[error("better-response repair did not settle within {moves} moves")]
    RepairDidNotSettle { moves: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}
